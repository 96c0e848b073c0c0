//! Combinatorial objectives over permutation and choice spaces.
//!
//! All eight kinds are bandit objectives: coefficients are sampled at
//! instance creation and only `eval` is exposed to the search loop. Values
//! are on the maximization scale throughout.

use serde::{Deserialize, Serialize};

use crate::error::ObjectiveError;
use crate::rng::{sample_normal, SeededRng};
use crate::space::{Candidate, SearchSpace};
use rand::RngExt;

/// Exhaustive-search limits for [`CombinatorialProblem::brute_force_optimum`].
const MAX_PERMUTATIONS: u128 = 40_320; // 8!
const MAX_SUBSETS: u128 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComboKind {
    Tsp,
    Flowshop,
    LinearOrdering,
    Qap,
    NQueens,
    Modular,
    Coverage,
    LogDet,
}

impl ComboKind {
    pub const ALL: [ComboKind; 8] = [
        Self::Tsp,
        Self::Flowshop,
        Self::LinearOrdering,
        Self::Qap,
        Self::NQueens,
        Self::Modular,
        Self::Coverage,
        Self::LogDet,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Tsp => "tsp",
            Self::Flowshop => "flowshop",
            Self::LinearOrdering => "linear_ordering",
            Self::Qap => "qap",
            Self::NQueens => "nqueens",
            Self::Modular => "modular",
            Self::Coverage => "coverage",
            Self::LogDet => "logdet",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ObjectiveError> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| ObjectiveError::UnknownFunction(name.to_string()))
    }

    /// Choice-space kinds take a subset size `k`; the rest are permutations.
    pub fn is_choice(&self) -> bool {
        matches!(self, Self::Modular | Self::Coverage | Self::LogDet)
    }
}

/// Result of an evaluation that can hit a degenerate region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComboEval {
    pub value: f64,
    /// Set when a log-determinant minor was numerically singular and the
    /// value is the `-inf` sentinel.
    pub singular: bool,
}

/// One concrete problem instance with hidden coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CombinatorialProblem {
    Tsp { cities: Vec<[f64; 2]> },
    Flowshop { costs: Vec<Vec<f64>> },
    LinearOrdering { weights: Vec<Vec<f64>> },
    Qap { flows: Vec<Vec<f64>>, distances: Vec<Vec<f64>> },
    NQueens { n: usize },
    Modular { weights: Vec<f64>, k: usize },
    Coverage { covers: Vec<Vec<usize>>, weights: Vec<f64>, k: usize },
    LogDet { matrix: Vec<Vec<f64>>, k: usize },
}

impl CombinatorialProblem {
    /// Sample an instance with i.i.d. coefficients. `k` is ignored for
    /// permutation kinds.
    pub fn sample(kind: ComboKind, n: usize, k: usize, rng: &mut SeededRng) -> Result<Self, ObjectiveError> {
        let space_check = if kind.is_choice() {
            SearchSpace::choice(n, k)
        } else {
            SearchSpace::permutation(n)
        };
        space_check.map_err(ObjectiveError::Space)?;
        let unit_matrix =
            |rng: &mut SeededRng| (0..n).map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        Ok(match kind {
            ComboKind::Tsp => Self::Tsp {
                cities: (0..n).map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect(),
            },
            ComboKind::Flowshop => Self::Flowshop { costs: unit_matrix(rng) },
            ComboKind::LinearOrdering => Self::LinearOrdering { weights: unit_matrix(rng) },
            ComboKind::Qap => Self::Qap { flows: unit_matrix(rng), distances: unit_matrix(rng) },
            ComboKind::NQueens => Self::NQueens { n },
            ComboKind::Modular => Self::Modular {
                weights: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
                k,
            },
            ComboKind::Coverage => {
                let covers = (0..n)
                    .map(|_| (0..n).filter(|_| rng.random_bool(0.5)).collect())
                    .collect();
                Self::Coverage {
                    covers,
                    weights: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
                    k,
                }
            }
            ComboKind::LogDet => {
                // M = A A^T + eps I, computed entry-wise so it is exactly symmetric.
                let a: Vec<Vec<f64>> =
                    (0..n).map(|_| (0..n).map(|_| sample_normal(rng)).collect()).collect();
                let mut m = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in i..n {
                        let dot: f64 = (0..n).map(|p| a[i][p] * a[j][p]).sum();
                        let v = dot + if i == j { 1e-3 } else { 0.0 };
                        m[i][j] = v;
                        m[j][i] = v;
                    }
                }
                Self::LogDet { matrix: m, k }
            }
        })
    }

    pub fn kind(&self) -> ComboKind {
        match self {
            Self::Tsp { .. } => ComboKind::Tsp,
            Self::Flowshop { .. } => ComboKind::Flowshop,
            Self::LinearOrdering { .. } => ComboKind::LinearOrdering,
            Self::Qap { .. } => ComboKind::Qap,
            Self::NQueens { .. } => ComboKind::NQueens,
            Self::Modular { .. } => ComboKind::Modular,
            Self::Coverage { .. } => ComboKind::Coverage,
            Self::LogDet { .. } => ComboKind::LogDet,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Tsp { cities } => cities.len(),
            Self::Flowshop { costs } => costs.len(),
            Self::LinearOrdering { weights } => weights.len(),
            Self::Qap { flows, .. } => flows.len(),
            Self::NQueens { n } => *n,
            Self::Modular { weights, .. } => weights.len(),
            Self::Coverage { weights, .. } => weights.len(),
            Self::LogDet { matrix, .. } => matrix.len(),
        }
    }

    pub fn subset_size(&self) -> Option<usize> {
        match self {
            Self::Modular { k, .. } | Self::Coverage { k, .. } | Self::LogDet { k, .. } => Some(*k),
            _ => None,
        }
    }

    pub fn search_space(&self) -> SearchSpace {
        match self.subset_size() {
            Some(k) => SearchSpace::choice(self.n(), k).expect("instance sizes are valid"),
            None => SearchSpace::permutation(self.n()).expect("instance sizes are valid"),
        }
    }

    /// Structural invariants: consistent matrix shapes, and PSD spectrum for
    /// the log-determinant matrix (within 1e-9).
    pub fn check_invariants(&self) -> Result<(), ObjectiveError> {
        let n = self.n();
        let square = |m: &Vec<Vec<f64>>, what: &str| {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                Err(ObjectiveError::Decode {
                    name: what.to_string(),
                    reason: format!("matrix is not {n}x{n}"),
                })
            } else {
                Ok(())
            }
        };
        match self {
            Self::Flowshop { costs } => square(costs, "costs")?,
            Self::LinearOrdering { weights } => square(weights, "weights")?,
            Self::Qap { flows, distances } => {
                square(flows, "flows")?;
                square(distances, "distances")?;
            }
            Self::Coverage { covers, weights, .. } => {
                if covers.len() != n || weights.len() != n {
                    return Err(ObjectiveError::Decode {
                        name: "covers".into(),
                        reason: "cover list and weights must have length n".into(),
                    });
                }
                if covers.iter().flatten().any(|&j| j >= n) {
                    return Err(ObjectiveError::Decode {
                        name: "covers".into(),
                        reason: "cover element out of range".into(),
                    });
                }
            }
            Self::LogDet { matrix, .. } => {
                square(matrix, "matrix")?;
                for i in 0..n {
                    for j in 0..n {
                        if (matrix[i][j] - matrix[j][i]).abs() > 1e-9 {
                            return Err(ObjectiveError::Decode {
                                name: "matrix".into(),
                                reason: format!("not symmetric at ({i},{j})"),
                            });
                        }
                    }
                }
                // Eigenvalues >= -1e-9 iff M + 1e-9 I admits a Cholesky factor.
                let shifted: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| matrix[i][j] + if i == j { 1e-9 } else { 0.0 })
                            .collect()
                    })
                    .collect();
                if cholesky_log_det(&shifted).is_none() {
                    return Err(ObjectiveError::Decode {
                        name: "matrix".into(),
                        reason: "not positive semi-definite within 1e-9".into(),
                    });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Evaluate a candidate (maximization scale). Singular log-determinant
    /// minors yield the `-inf` sentinel, see [`Self::eval_detailed`].
    pub fn eval(&self, cand: &Candidate) -> Result<f64, ObjectiveError> {
        self.eval_detailed(cand).map(|e| e.value)
    }

    pub fn eval_detailed(&self, cand: &Candidate) -> Result<ComboEval, ObjectiveError> {
        self.search_space().validate(cand).into_result()?;
        let value = match (self, cand) {
            (Self::Tsp { cities }, Candidate::Permutation(x)) => {
                -(0..x.len() - 1)
                    .map(|i| {
                        let a = cities[x[i]];
                        let b = cities[x[i + 1]];
                        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
                    })
                    .sum::<f64>()
            }
            (Self::Flowshop { costs }, Candidate::Permutation(x)) => {
                -x.iter().enumerate().map(|(i, &xi)| costs[i][xi]).sum::<f64>()
            }
            (Self::LinearOrdering { weights }, Candidate::Permutation(x)) => {
                let n = x.len();
                let mut total = 0.0;
                for i in 0..n {
                    for j in i + 1..n {
                        total += weights[x[i]][x[j]];
                    }
                }
                total
            }
            (Self::Qap { flows, distances }, Candidate::Permutation(x)) => {
                // -Trace(W P D P^T) with P the permutation matrix of x.
                let n = x.len();
                let mut trace = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        trace += flows[i][j] * distances[x[j]][x[i]];
                    }
                }
                -trace
            }
            (Self::NQueens { .. }, Candidate::Permutation(x)) => {
                let n = x.len();
                let mut attacks = 0usize;
                for i in 0..n {
                    for j in i + 1..n {
                        if (j - i) == x[i].abs_diff(x[j]) {
                            attacks += 1;
                        }
                    }
                }
                -(attacks as f64)
            }
            (Self::Modular { weights, .. }, Candidate::Choice(ix)) => {
                ix.iter().map(|&i| weights[i]).sum()
            }
            (Self::Coverage { covers, weights, .. }, Candidate::Choice(ix)) => {
                let mut covered = vec![false; weights.len()];
                for &i in ix {
                    for &j in &covers[i] {
                        covered[j] = true;
                    }
                }
                covered
                    .iter()
                    .zip(weights)
                    .filter_map(|(c, w)| c.then_some(*w))
                    .sum()
            }
            (Self::LogDet { matrix, .. }, Candidate::Choice(ix)) => {
                let mut sorted = ix.clone();
                sorted.sort_unstable();
                let minor: Vec<Vec<f64>> = sorted
                    .iter()
                    .map(|&i| sorted.iter().map(|&j| matrix[i][j]).collect())
                    .collect();
                match cholesky_log_det(&minor) {
                    Some(logdet) => logdet,
                    None => {
                        return Ok(ComboEval { value: f64::NEG_INFINITY, singular: true });
                    }
                }
            }
            _ => unreachable!("validated against the instance space"),
        };
        Ok(ComboEval { value, singular: false })
    }

    /// Exhaustive maximizer, ties broken by the lexicographically smallest
    /// candidate. Refuses spaces beyond the enumeration limits.
    pub fn brute_force_optimum(&self) -> Result<(Candidate, f64), ObjectiveError> {
        let n = self.n();
        match self.subset_size() {
            None => {
                let size: u128 = (1..=n as u128).product();
                if size > MAX_PERMUTATIONS {
                    return Err(ObjectiveError::SpaceTooLarge { size, limit: MAX_PERMUTATIONS });
                }
                let mut best: Option<(Vec<usize>, f64)> = None;
                let mut order: Vec<usize> = (0..n).collect();
                loop {
                    let cand = Candidate::Permutation(order.clone());
                    let v = self.eval(&cand)?;
                    if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                        best = Some((order.clone(), v));
                    }
                    if !next_permutation(&mut order) {
                        break;
                    }
                }
                let (order, v) = best.expect("n >= 2");
                Ok((Candidate::Permutation(order), v))
            }
            Some(k) => {
                let size = binomial(n as u128, k as u128);
                if size > MAX_SUBSETS {
                    return Err(ObjectiveError::SpaceTooLarge { size, limit: MAX_SUBSETS });
                }
                let mut best: Option<(Vec<usize>, f64)> = None;
                let mut subset: Vec<usize> = (0..k).collect();
                loop {
                    let cand = Candidate::Choice(subset.clone());
                    let v = self.eval(&cand)?;
                    if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                        best = Some((subset.clone(), v));
                    }
                    if !next_subset(&mut subset, n) {
                        break;
                    }
                }
                let (subset, v) = best.expect("k >= 1");
                Ok((Candidate::Choice(subset), v))
            }
        }
    }
}

/// Log-determinant via Cholesky; `None` when a pivot is non-positive
/// (numerically singular or indefinite).
fn cholesky_log_det(m: &[Vec<f64>]) -> Option<f64> {
    let n = m.len();
    let mut l = vec![vec![0.0f64; n]; n];
    let mut log_det = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let mut acc = m[i][j];
            for p in 0..j {
                acc -= l[i][p] * l[j][p];
            }
            if i == j {
                if acc <= 0.0 {
                    return None;
                }
                l[i][j] = acc.sqrt();
                log_det += acc.ln();
            } else {
                l[i][j] = acc / l[j][j];
            }
        }
    }
    Some(log_det)
}

/// Advance to the next permutation in lexicographic order.
fn next_permutation(order: &mut [usize]) -> bool {
    let n = order.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| order[i] < order[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| order[j] > order[i]).expect("exists by choice of i");
    order.swap(i, j);
    order[i + 1..].reverse();
    true
}

/// Advance a sorted k-subset of `{0..n-1}` in lexicographic order.
fn next_subset(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let Some(i) = (0..k).rev().find(|&i| subset[i] < n - k + i) else {
        return false;
    };
    subset[i] += 1;
    for j in i + 1..k {
        subset[j] = subset[j - 1] + 1;
    }
    true
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn perm(v: &[usize]) -> Candidate {
        Candidate::Permutation(v.to_vec())
    }

    fn choice(v: &[usize]) -> Candidate {
        Candidate::Choice(v.to_vec())
    }

    #[test]
    fn tsp_open_path() {
        let prob = CombinatorialProblem::Tsp {
            cities: vec![[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]],
        };
        // Legs 3 and 4.
        assert_eq!(prob.eval(&perm(&[0, 1, 2])).unwrap(), -7.0);
        // Legs 3 and 5 of the 3-4-5 triangle.
        assert_eq!(prob.eval(&perm(&[1, 0, 2])).unwrap(), -8.0);
    }

    #[test]
    fn qap_identity_matrices() {
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let prob = CombinatorialProblem::Qap { flows: eye.clone(), distances: eye };
        assert_eq!(prob.eval(&perm(&[0, 1])).unwrap(), -2.0);
        assert_eq!(prob.eval(&perm(&[1, 0])).unwrap(), -2.0);
    }

    #[test]
    fn nqueens_main_diagonal() {
        let prob = CombinatorialProblem::NQueens { n: 4 };
        assert_eq!(prob.eval(&perm(&[0, 1, 2, 3])).unwrap(), -6.0);
        // A classic non-attacking placement.
        assert_eq!(prob.eval(&perm(&[1, 3, 0, 2])).unwrap(), 0.0);
    }

    #[test]
    fn modular_sum() {
        let prob = CombinatorialProblem::Modular { weights: vec![1.0, 2.0, 3.0, 4.0], k: 2 };
        assert_eq!(prob.eval(&choice(&[0, 3])).unwrap(), 5.0);
    }

    #[test]
    fn coverage_union() {
        let prob = CombinatorialProblem::Coverage {
            covers: vec![vec![0, 1], vec![1, 2], vec![], vec![3]],
            weights: vec![1.0, 1.0, 1.0, 1.0],
            k: 2,
        };
        assert_eq!(prob.eval(&choice(&[0, 1])).unwrap(), 3.0);
    }

    #[test]
    fn logdet_scaled_identity() {
        let m = vec![
            vec![2.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ];
        let prob = CombinatorialProblem::LogDet { matrix: m, k: 2 };
        let v = prob.eval(&choice(&[0, 1])).unwrap();
        assert!((v - 2.0 * 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn logdet_singular_minor_is_flagged_sentinel() {
        let m = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let prob = CombinatorialProblem::LogDet { matrix: m, k: 2 };
        let out = prob.eval_detailed(&choice(&[0, 1])).unwrap();
        assert!(out.singular);
        assert_eq!(out.value, f64::NEG_INFINITY);
    }

    #[test]
    fn flowshop_identity_costs() {
        let prob = CombinatorialProblem::Flowshop {
            costs: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        let (best, v) = prob.brute_force_optimum().unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(best, perm(&[1, 0]));
    }

    #[test]
    fn linear_ordering_identity_is_upper_triangular_sum() {
        let w = vec![
            vec![0.0, 1.0, 2.0],
            vec![3.0, 0.0, 4.0],
            vec![5.0, 6.0, 0.0],
        ];
        let prob = CombinatorialProblem::LinearOrdering { weights: w };
        assert_eq!(prob.eval(&perm(&[0, 1, 2])).unwrap(), 1.0 + 2.0 + 4.0);
    }

    #[test]
    fn linear_ordering_total_sum_is_permutation_invariant() {
        let mut rng = rng_from_seed(4);
        let prob = CombinatorialProblem::sample(ComboKind::LinearOrdering, 5, 0, &mut rng).unwrap();
        let space = prob.search_space();
        let reverse = |x: &Candidate| {
            let Candidate::Permutation(p) = x else { panic!() };
            let mut r = p.clone();
            r.reverse();
            Candidate::Permutation(r)
        };
        for _ in 0..50 {
            let x = space.sample(&mut rng);
            let up = prob.eval(&x).unwrap();
            let down = prob.eval(&reverse(&x)).unwrap();
            let id_total = prob.eval(&perm(&[0, 1, 2, 3, 4])).unwrap()
                + prob.eval(&perm(&[4, 3, 2, 1, 0])).unwrap();
            assert!((up + down - id_total).abs() < 1e-9);
        }
    }

    #[test]
    fn nqueens_value_range() {
        let prob = CombinatorialProblem::NQueens { n: 6 };
        let space = prob.search_space();
        let mut rng = rng_from_seed(8);
        for _ in 0..200 {
            let v = prob.eval(&space.sample(&mut rng)).unwrap();
            assert!((-15.0..=0.0).contains(&v), "value {v} outside [-n(n-1)/2, 0]");
        }
    }

    #[test]
    fn logdet_monotone_under_diagonal_boost() {
        let mut rng = rng_from_seed(12);
        for _ in 0..10 {
            let prob = CombinatorialProblem::sample(ComboKind::LogDet, 6, 3, &mut rng).unwrap();
            let CombinatorialProblem::LogDet { matrix, k } = &prob else { panic!() };
            let boosted = CombinatorialProblem::LogDet {
                matrix: (0..6)
                    .map(|i| (0..6).map(|j| matrix[i][j] + if i == j { 0.5 } else { 0.0 }).collect())
                    .collect(),
                k: *k,
            };
            let cand = prob.search_space().sample(&mut rng);
            assert!(boosted.eval(&cand).unwrap() > prob.eval(&cand).unwrap());
        }
    }

    #[test]
    fn sampled_instances_satisfy_invariants_and_are_deterministic() {
        for kind in ComboKind::ALL {
            let a = CombinatorialProblem::sample(kind, 6, 3, &mut rng_from_seed(99)).unwrap();
            let b = CombinatorialProblem::sample(kind, 6, 3, &mut rng_from_seed(99)).unwrap();
            assert_eq!(a, b, "{kind:?} resample differs");
            a.check_invariants().unwrap();
        }
    }

    #[test]
    fn tsp_cities_in_unit_square() {
        let mut rng = rng_from_seed(21);
        let CombinatorialProblem::Tsp { cities } =
            CombinatorialProblem::sample(ComboKind::Tsp, 10, 0, &mut rng).unwrap()
        else {
            panic!()
        };
        assert_eq!(cities.len(), 10);
        assert!(cities.iter().all(|c| (0.0..=1.0).contains(&c[0]) && (0.0..=1.0).contains(&c[1])));
    }

    #[test]
    fn brute_force_examples() {
        let nq = CombinatorialProblem::NQueens { n: 4 };
        assert_eq!(nq.brute_force_optimum().unwrap().1, 0.0);

        let modular = CombinatorialProblem::Modular { weights: vec![1.0, 2.0, 3.0, 4.0], k: 2 };
        let (best, v) = modular.brute_force_optimum().unwrap();
        assert_eq!(v, 7.0);
        assert_eq!(best, choice(&[2, 3]));
    }

    #[test]
    fn brute_force_refuses_large_spaces() {
        let prob = CombinatorialProblem::NQueens { n: 9 };
        match prob.brute_force_optimum() {
            Err(ObjectiveError::SpaceTooLarge { size, .. }) => assert_eq!(size, 362_880),
            other => panic!("expected SpaceTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn brute_force_dominates_random_candidates() {
        let mut rng = rng_from_seed(7);
        for kind in ComboKind::ALL {
            let prob = CombinatorialProblem::sample(kind, 6, 3, &mut rng).unwrap();
            let (_, best) = prob.brute_force_optimum().unwrap();
            let space = prob.search_space();
            for _ in 0..1000 {
                let v = prob.eval(&space.sample(&mut rng)).unwrap();
                assert!(best >= v, "{kind:?}: brute force {best} < random {v}");
            }
        }
    }

    #[test]
    fn instance_round_trips_through_json() {
        let mut rng = rng_from_seed(15);
        for kind in ComboKind::ALL {
            let prob = CombinatorialProblem::sample(kind, 5, 2, &mut rng).unwrap();
            let json = serde_json::to_string(&prob).unwrap();
            let back: CombinatorialProblem = serde_json::from_str(&json).unwrap();
            assert_eq!(back, prob);
        }
    }
}
