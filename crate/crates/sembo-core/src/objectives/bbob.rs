//! Synthetic base functions in the BBOB style.
//!
//! Every function is a minimization objective over `[-5, 5]^dim` evaluating
//! to 0 at its canonical optimum (the origin, except for LinearSlope whose
//! optimum sits on the box boundary, and Schwefel whose multimodal landscape
//! only approximately reaches 0). The train/test split follows landscape
//! families so that held-out functions are genuinely unseen.

use crate::error::ObjectiveError;
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum BbobFunction {
    // Train split.
    Sphere,
    Ellipsoidal,
    Rastrigin,
    AttractiveSector,
    StepEllipsoidal,
    Discus,
    BentCigar,
    Weierstrass,
    Schwefel,
    // Test split.
    LinearSlope,
    RosenbrockRotated,
    SharpRidge,
    DifferentPowers,
    NegativeSphere,
    SchaffersF7,
    SchaffersF7IllConditioned,
    GriewankRosenbrock,
    FonsecaFleming,
}

impl BbobFunction {
    pub const TRAIN: [BbobFunction; 9] = [
        Self::Sphere,
        Self::Ellipsoidal,
        Self::Rastrigin,
        Self::AttractiveSector,
        Self::StepEllipsoidal,
        Self::Discus,
        Self::BentCigar,
        Self::Weierstrass,
        Self::Schwefel,
    ];

    pub const TEST: [BbobFunction; 9] = [
        Self::LinearSlope,
        Self::RosenbrockRotated,
        Self::SharpRidge,
        Self::DifferentPowers,
        Self::NegativeSphere,
        Self::SchaffersF7,
        Self::SchaffersF7IllConditioned,
        Self::GriewankRosenbrock,
        Self::FonsecaFleming,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sphere => "Sphere",
            Self::Ellipsoidal => "Ellipsoidal",
            Self::Rastrigin => "Rastrigin",
            Self::AttractiveSector => "AttractiveSector",
            Self::StepEllipsoidal => "StepEllipsoidal",
            Self::Discus => "Discus",
            Self::BentCigar => "BentCigar",
            Self::Weierstrass => "Weierstrass",
            Self::Schwefel => "Schwefel",
            Self::LinearSlope => "LinearSlope",
            Self::RosenbrockRotated => "RosenbrockRotated",
            Self::SharpRidge => "SharpRidge",
            Self::DifferentPowers => "DifferentPowers",
            Self::NegativeSphere => "NegativeSphere",
            Self::SchaffersF7 => "SchaffersF7",
            Self::SchaffersF7IllConditioned => "SchaffersF7IllConditioned",
            Self::GriewankRosenbrock => "GriewankRosenbrock",
            Self::FonsecaFleming => "FonsecaFleming",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ObjectiveError> {
        Self::TRAIN
            .iter()
            .chain(Self::TEST.iter())
            .copied()
            .find(|f| f.name() == name)
            .ok_or_else(|| ObjectiveError::UnknownFunction(name.to_string()))
    }

    pub fn is_train(&self) -> bool {
        Self::TRAIN.contains(self)
    }

    /// Evaluate at `x` (minimization scale).
    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let d = x.len();
        debug_assert!(d >= 1);
        match self {
            Self::Sphere => sum_sq(x),
            Self::NegativeSphere => -sum_sq(x),
            Self::Ellipsoidal => x
                .iter()
                .enumerate()
                .map(|(i, &v)| T::of(cond_exp(1e6, i, d)) * v * v)
                .fold(T::zero(), |a, b| a + b),
            Self::Rastrigin => {
                let two_pi = T::of(std::f64::consts::TAU);
                let cos_sum = x.iter().map(|&v| (two_pi * v).cos()).fold(T::zero(), |a, b| a + b);
                T::of(10.0) * (T::of(d as f64) - cos_sum) + sum_sq(x)
            }
            Self::AttractiveSector => x
                .iter()
                .map(|&v| {
                    let s = if v > T::zero() { T::of(100.0) } else { T::one() };
                    let sv = s * v;
                    sv * sv
                })
                .fold(T::zero(), |a, b| a + b),
            Self::StepEllipsoidal => {
                let rounded_sum = x
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let z = (v + T::of(0.5)).floor();
                        T::of(cond_exp(1e2, i, d)) * z * z
                    })
                    .fold(T::zero(), |a, b| a + b);
                T::of(0.1) * (x[0].abs() / T::of(1e4)).max(rounded_sum)
            }
            Self::Discus => {
                T::of(1e6) * x[0] * x[0] + sum_sq(&x[1..])
            }
            Self::BentCigar => x[0] * x[0] + T::of(1e6) * sum_sq(&x[1..]),
            Self::Weierstrass => {
                let two_pi = T::of(std::f64::consts::TAU);
                let half = T::of(0.5);
                let mut per_dim = T::zero();
                for &v in x {
                    let mut a_k = T::one();
                    let mut b_k = T::one();
                    for _ in 0..=20 {
                        per_dim = per_dim + a_k * (two_pi * b_k * (v + half)).cos();
                        a_k = a_k * half;
                        b_k = b_k * T::of(3.0);
                    }
                }
                let mut base = T::zero();
                let mut a_k = T::one();
                let mut b_k = T::one();
                for _ in 0..=20 {
                    base = base + a_k * (two_pi * b_k * half).cos();
                    a_k = a_k * half;
                    b_k = b_k * T::of(3.0);
                }
                per_dim - T::of(d as f64) * base
            }
            Self::Schwefel => {
                let shift = T::of(420.9687462275036);
                let sum = x
                    .iter()
                    .map(|&v| {
                        let z = T::of(100.0) * v + shift;
                        z * z.abs().sqrt().sin()
                    })
                    .fold(T::zero(), |a, b| a + b);
                T::of(418.9828872724339 * d as f64) - sum
            }
            Self::LinearSlope => x
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let s = T::of(cond_exp(10.0, i, d));
                    s * (T::of(5.0) - v.min(T::of(5.0)))
                })
                .fold(T::zero(), |a, b| a + b),
            Self::RosenbrockRotated => {
                if d == 1 {
                    return x[0] * x[0];
                }
                let mut total = T::zero();
                for i in 0..d - 1 {
                    let zi = x[i] + T::one();
                    let zn = x[i + 1] + T::one();
                    let a = zi * zi - zn;
                    total = total + T::of(100.0) * a * a + x[i] * x[i];
                }
                total
            }
            Self::SharpRidge => x[0] * x[0] + T::of(100.0) * sum_sq(&x[1..]).sqrt(),
            Self::DifferentPowers => x
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let e = 2.0 + if d > 1 { 4.0 * i as f64 / (d - 1) as f64 } else { 0.0 };
                    v.abs().powf(T::of(e))
                })
                .fold(T::zero(), |a, b| a + b)
                .sqrt(),
            Self::SchaffersF7 => schaffers(x, 1.0),
            Self::SchaffersF7IllConditioned => schaffers(x, 1000.0),
            Self::GriewankRosenbrock => {
                if d == 1 {
                    return x[0] * x[0];
                }
                let mut total = T::zero();
                for i in 0..d - 1 {
                    let zi = x[i] + T::one();
                    let zn = x[i + 1] + T::one();
                    let a = zi * zi - zn;
                    let s = T::of(100.0) * a * a + x[i] * x[i];
                    total = total + s / T::of(4000.0) - s.cos();
                }
                T::of(10.0) / T::of((d - 1) as f64) * total + T::of(10.0)
            }
            Self::FonsecaFleming => T::one() - (-sum_sq(x)).exp(),
        }
    }
}

fn sum_sq<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).fold(T::zero(), |a, b| a + b)
}

/// `cond^(i/(d-1))`, the usual conditioning ramp; 1 when `d == 1`.
fn cond_exp(cond: f64, i: usize, d: usize) -> f64 {
    if d > 1 {
        cond.powf(i as f64 / (d - 1) as f64)
    } else {
        1.0
    }
}

fn schaffers<T: Scalar>(x: &[T], cond: f64) -> T {
    let d = x.len();
    if d == 1 {
        return x[0] * x[0];
    }
    let scaled: Vec<T> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| T::of(cond_exp(cond, i, d)) * v)
        .collect();
    let mut acc = T::zero();
    for i in 0..d - 1 {
        let s = (scaled[i] * scaled[i] + scaled[i + 1] * scaled[i + 1]).sqrt();
        let root = s.sqrt();
        let sin_term = (T::of(50.0) * s.powf(T::of(0.2))).sin();
        acc = acc + root + root * sin_term * sin_term;
    }
    let mean = acc / T::of((d - 1) as f64);
    mean * mean
}
