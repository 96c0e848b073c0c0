//! Randomized transformations over the synthetic base functions: shift,
//! rotation, and per-parameter discretization. Evaluation composes as
//! `f_base(R (v - c))` with the candidate decoded to a numeric vector.

use serde::{Deserialize, Serialize};

use super::bbob::BbobFunction;
use crate::error::ObjectiveError;
use crate::fmt::format_float;
use crate::rng::{sample_normal, SeededRng};
use crate::space::{Candidate, ParamSpec, ParamValue, SearchSpace};
use rand::RngExt;

const BOUND: f64 = 5.0;

/// Which transforms to sample in [`SyntheticObjective::sample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformOptions {
    pub shift: bool,
    pub rotate: bool,
    pub discretize: bool,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self { shift: true, rotate: true, discretize: true }
    }
}

impl TransformOptions {
    pub fn none() -> Self {
        Self { shift: false, rotate: false, discretize: false }
    }
}

/// A transformed synthetic objective together with its search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticObjective {
    base: BbobFunction,
    dim: usize,
    shift: Vec<f64>,
    /// Row-major `dim x dim` orthonormal matrix.
    rotation: Vec<f64>,
    space: SearchSpace,
}

impl SyntheticObjective {
    /// Untransformed objective: zero shift, identity rotation, continuous
    /// parameters `x0..x(dim-1)` over `[-5, 5]`.
    pub fn identity(base: BbobFunction, dim: usize) -> Self {
        let mut rotation = vec![0.0; dim * dim];
        for i in 0..dim {
            rotation[i * dim + i] = 1.0;
        }
        Self {
            base,
            dim,
            shift: vec![0.0; dim],
            rotation,
            space: continuous_space(dim),
        }
    }

    /// Sample shift, rotation, and discretization per the transform options.
    ///
    /// The shift is uniform in `[-5,5]^dim`, the rotation is the
    /// orthonormalization of a Gaussian matrix, and each parameter
    /// independently stays continuous or becomes DISCRETE/CATEGORICAL over a
    /// uniform grid of 2..=16 points.
    pub fn sample(
        base: BbobFunction,
        dim: usize,
        opts: TransformOptions,
        rng: &mut SeededRng,
    ) -> Self {
        let mut obj = Self::identity(base, dim);
        if opts.shift {
            obj.shift = (0..dim).map(|_| rng.random_range(-BOUND..=BOUND)).collect();
        }
        if opts.rotate {
            obj.rotation = sample_rotation(dim, rng);
        }
        if opts.discretize {
            let params = (0..dim)
                .map(|i| {
                    let name = format!("x{i}");
                    match rng.random_range(0..3u8) {
                        0 => ParamSpec::float(name, -BOUND, BOUND),
                        choice => {
                            let m = rng.random_range(2..=16usize);
                            let grid = uniform_grid(-BOUND, BOUND, m);
                            if choice == 1 {
                                ParamSpec::discrete(name, grid)
                            } else {
                                ParamSpec::categorical(
                                    name,
                                    grid.iter().map(|v| format_float(*v)).collect(),
                                )
                            }
                        }
                    }
                })
                .collect();
            obj.space = SearchSpace::flat(params).expect("generated space is valid");
        }
        obj
    }

    pub fn base(&self) -> BbobFunction {
        self.base
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    /// Rename parameters, keeping values and transforms untouched. Used by
    /// the pretraining name-randomization augmentation.
    pub fn with_param_names(mut self, names: &[String]) -> Result<Self, ObjectiveError> {
        let SearchSpace::Flat { params } = &self.space else {
            unreachable!("synthetic spaces are flat")
        };
        if names.len() != params.len() {
            return Err(ObjectiveError::DimensionMismatch { expected: params.len(), got: names.len() });
        }
        let renamed = params
            .iter()
            .zip(names)
            .map(|(p, n)| ParamSpec { name: n.clone(), kind: p.kind.clone() })
            .collect();
        self.space = SearchSpace::flat(renamed)?;
        Ok(self)
    }

    /// Evaluate the transformed objective at a candidate (minimization scale).
    pub fn eval(&self, cand: &Candidate) -> Result<f64, ObjectiveError> {
        let v = self.decode(cand)?;
        Ok(self.eval_vec(&v))
    }

    /// Evaluate at an already-decoded numeric vector.
    pub fn eval_vec(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.dim, "decoded vector length");
        let mut z = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..self.dim {
                acc += self.rotation[i * self.dim + j] * (v[j] - self.shift[j]);
            }
            z[i] = acc;
        }
        self.base.eval(&z)
    }

    /// Decode a candidate into the numeric vector seen by the base function.
    /// DISCRETE values are grid reals; CATEGORICAL labels are parsed back to
    /// the grid reals they were formatted from.
    pub fn decode(&self, cand: &Candidate) -> Result<Vec<f64>, ObjectiveError> {
        self.space.validate(cand).into_result()?;
        let Candidate::Flat(values) = cand else { unreachable!("validated flat") };
        let SearchSpace::Flat { params } = &self.space else { unreachable!() };
        values
            .iter()
            .zip(params)
            .map(|(v, p)| match v {
                ParamValue::Float(x) => Ok(*x),
                ParamValue::Int(x) => Ok(*x as f64),
                ParamValue::Categorical(label) => label.parse::<f64>().map_err(|_| {
                    ObjectiveError::Decode {
                        name: p.name.clone(),
                        reason: format!("label {label:?} is not numeric"),
                    }
                }),
            })
            .collect()
    }

    /// Max-norm orthonormality defect of the rotation, `max |R R^T - I|`.
    pub fn rotation_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += self.rotation[i * d + k] * self.rotation[j * d + k];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).abs());
            }
        }
        worst
    }
}

fn continuous_space(dim: usize) -> SearchSpace {
    SearchSpace::flat((0..dim).map(|i| ParamSpec::float(format!("x{i}"), -BOUND, BOUND)).collect())
        .expect("continuous space is valid")
}

/// Evenly spaced grid with endpoints, snapped to the canonical 6-significant
/// digit representation so labels round-trip exactly.
fn uniform_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| {
            let v = lo + (hi - lo) * i as f64 / (m - 1) as f64;
            format_float(v).parse::<f64>().expect("canonical format parses")
        })
        .collect()
}

/// Haar-ish orthonormal matrix via modified Gram-Schmidt over a Gaussian
/// matrix; rows are re-drawn in the measure-zero case of near dependence.
fn sample_rotation(dim: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while rows.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| sample_normal(rng)).collect();
        for prev in &rows {
            let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (x, p) in v.iter_mut().zip(prev) {
                *x -= dot * p;
            }
        }
        // Second orthogonalization pass tightens the defect to ~1e-15.
        for prev in &rows {
            let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (x, p) in v.iter_mut().zip(prev) {
                *x -= dot * p;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        for x in &mut v {
            *x /= norm;
        }
        rows.push(v);
    }
    rows.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::space::ParamKind;

    #[test]
    fn identity_transform_matches_base() {
        let obj = SyntheticObjective::identity(BbobFunction::Sphere, 3);
        let cand = Candidate::Flat(vec![
            ParamValue::Float(1.0),
            ParamValue::Float(-2.0),
            ParamValue::Float(0.5),
        ]);
        assert_eq!(obj.eval(&cand).unwrap(), BbobFunction::Sphere.eval(&[1.0, -2.0, 0.5]));
    }

    #[test]
    fn optimum_moves_to_shift() {
        let mut rng = rng_from_seed(2);
        for f in [BbobFunction::Sphere, BbobFunction::Rastrigin] {
            let obj = SyntheticObjective::sample(
                f,
                3,
                TransformOptions { shift: true, rotate: true, discretize: false },
                &mut rng,
            );
            let at_shift = obj.eval_vec(obj.shift());
            assert!(at_shift.abs() < 1e-9, "{}: {at_shift}", f.name());
        }
    }

    #[test]
    fn rotations_are_orthonormal() {
        let mut rng = rng_from_seed(7);
        for dim in [1usize, 2, 4, 8] {
            let obj = SyntheticObjective::sample(
                BbobFunction::Sphere,
                dim,
                TransformOptions::default(),
                &mut rng,
            );
            assert!(obj.rotation_defect() <= 1e-9, "dim {dim}: {}", obj.rotation_defect());
        }
    }

    #[test]
    fn rotation_property_two_routes_agree() {
        // eval of the transformed objective equals base at R(x - c).
        let mut rng = rng_from_seed(13);
        for f in BbobFunction::TRAIN.iter().chain(BbobFunction::TEST.iter()) {
            let obj = SyntheticObjective::sample(
                *f,
                3,
                TransformOptions { shift: true, rotate: true, discretize: false },
                &mut rng,
            );
            for _ in 0..100 {
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..=5.0)).collect();
                let via_obj = obj.eval_vec(&v);
                let mut z = vec![0.0; 3];
                for i in 0..3 {
                    z[i] = (0..3).map(|j| obj.rotation()[i * 3 + j] * (v[j] - obj.shift()[j])).sum();
                }
                let direct = f.eval(&z);
                let tol = 1e-12 * (1.0 + direct.abs());
                assert!((via_obj - direct).abs() <= tol, "{}: {via_obj} vs {direct}", f.name());
            }
        }
    }

    #[test]
    fn discretized_parameters_have_2_to_16_points() {
        let mut rng = rng_from_seed(5);
        let mut saw_discrete = false;
        let mut saw_categorical = false;
        for _ in 0..40 {
            let obj = SyntheticObjective::sample(
                BbobFunction::Sphere,
                4,
                TransformOptions::default(),
                &mut rng,
            );
            for p in obj.space().params() {
                match &p.kind {
                    ParamKind::Discrete { values } => {
                        saw_discrete = true;
                        assert!((2..=16).contains(&values.len()));
                        assert!(values.iter().all(|v| (-5.0..=5.0).contains(v)));
                    }
                    ParamKind::Categorical { values } => {
                        saw_categorical = true;
                        assert!((2..=16).contains(&values.len()));
                    }
                    ParamKind::Float { lo, hi } => {
                        assert_eq!((*lo, *hi), (-5.0, 5.0));
                    }
                    ParamKind::Int { .. } => panic!("discretization never yields INT"),
                }
            }
        }
        assert!(saw_discrete && saw_categorical);
    }

    #[test]
    fn categorical_labels_decode_to_grid_reals() {
        let mut rng = rng_from_seed(23);
        let obj = loop {
            let o = SyntheticObjective::sample(
                BbobFunction::Sphere,
                2,
                TransformOptions { shift: false, rotate: false, discretize: true },
                &mut rng,
            );
            if o.space().params().iter().any(|p| matches!(p.kind, ParamKind::Categorical { .. })) {
                break o;
            }
        };
        let cand = obj.space().sample(&mut rng);
        let decoded = obj.decode(&cand).unwrap();
        assert!(decoded.iter().all(|v| (-5.0..=5.0).contains(v)));
    }

    #[test]
    fn eval_rejects_wrong_candidate() {
        let obj = SyntheticObjective::identity(BbobFunction::Sphere, 2);
        let bad = Candidate::Flat(vec![ParamValue::Float(0.0)]);
        assert!(obj.eval(&bad).is_err());
    }

    #[test]
    fn instance_round_trips_through_json() {
        let mut rng = rng_from_seed(31);
        let obj = SyntheticObjective::sample(
            BbobFunction::Rastrigin,
            3,
            TransformOptions::default(),
            &mut rng,
        );
        let json = serde_json::to_string(&obj).unwrap();
        let back: SyntheticObjective = serde_json::from_str(&json).unwrap();
        assert_eq!(back, obj);
    }
}
