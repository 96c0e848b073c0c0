//! Predictive and optimization metrics.

use serde::{Deserialize, Serialize};

use crate::regressor::GaussianPrediction;
use crate::stats::normal_cdf;

/// Running maximum.
pub fn best_so_far(ys: &[f64]) -> Vec<f64> {
    assert!(!ys.is_empty());
    let mut best = f64::NEG_INFINITY;
    ys.iter()
        .map(|&y| {
            best = best.max(y);
            best
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveMetrics {
    /// Mean Gaussian negative log-likelihood per prediction.
    pub nll: f64,
    /// Mean absolute error of the predictive means.
    pub mae: f64,
    /// Coefficient of determination; `None` when the observations are all
    /// equal and the denominator vanishes.
    pub r2: Option<f64>,
    /// Mean absolute calibration error over the 19 quantile levels
    /// 0.05..=0.95.
    pub mace: f64,
}

const MACE_LEVELS: usize = 19;

pub fn predictive_metrics(preds: &[GaussianPrediction], ys: &[f64]) -> PredictiveMetrics {
    assert_eq!(preds.len(), ys.len());
    assert!(!preds.is_empty());
    let n = preds.len() as f64;

    let nll = preds
        .iter()
        .zip(ys)
        .map(|(p, &y)| {
            let z = y - p.mu;
            p.sigma.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln() + z * z / (2.0 * p.sigma * p.sigma)
        })
        .sum::<f64>()
        / n;

    let mae = preds.iter().zip(ys).map(|(p, &y)| (y - p.mu).abs()).sum::<f64>() / n;

    let y_mean = ys.iter().sum::<f64>() / n;
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    let r2 = if ss_tot > 0.0 {
        let ss_res: f64 = preds.iter().zip(ys).map(|(p, &y)| (y - p.mu) * (y - p.mu)).sum();
        Some(1.0 - ss_res / ss_tot)
    } else {
        None
    };

    let coverages: Vec<f64> =
        preds.iter().zip(ys).map(|(p, &y)| normal_cdf((y - p.mu) / p.sigma)).collect();
    // Quantile grid 0.05..=0.95 computed as j/20 so that an exactly
    // calibrated sample of n = 20k points yields a MACE of exactly zero.
    let mace = (1..=MACE_LEVELS)
        .map(|j| {
            let q = j as f64 / 20.0;
            let empirical = coverages.iter().filter(|&&c| c <= q).count() as f64 / n;
            (empirical - q).abs()
        })
        .sum::<f64>()
        / MACE_LEVELS as f64;

    PredictiveMetrics { nll, mae, r2, mace }
}

/// Median log budget ratio of `curve_a` against `curve_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEfficiency {
    /// `None` when `curve_a` reaches none of the reference values.
    pub score: Option<f64>,
    /// Reference values `curve_a` never reaches (excluded from the median).
    pub unreachable: usize,
    pub total: usize,
}

/// For each value on the reference best-so-far curve, compare the smallest
/// 1-based trial budget each curve needs to reach it; the score is the
/// median of `ln(budget_a / budget_ref)`. Positive means `curve_a` needs
/// more budget than the reference.
pub fn log_efficiency(curve_a: &[f64], curve_ref: &[f64]) -> LogEfficiency {
    assert!(!curve_a.is_empty() && !curve_ref.is_empty());
    debug_assert!(curve_a.windows(2).all(|w| w[0] <= w[1]), "curve_a must be non-decreasing");
    debug_assert!(curve_ref.windows(2).all(|w| w[0] <= w[1]), "curve_ref must be non-decreasing");
    let mut ratios = Vec::with_capacity(curve_ref.len());
    let mut unreachable = 0usize;
    for &y in curve_ref {
        let budget_ref = curve_ref.iter().position(|&v| v >= y).expect("y lies on the curve") + 1;
        match curve_a.iter().position(|&v| v >= y) {
            Some(i) => ratios.push(((i + 1) as f64 / budget_ref as f64).ln()),
            None => unreachable += 1,
        }
    }
    let total = curve_ref.len();
    if ratios.is_empty() {
        return LogEfficiency { score: None, unreachable, total };
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let m = ratios.len();
    let median = if m % 2 == 1 {
        ratios[m / 2]
    } else {
        (ratios[m / 2 - 1] + ratios[m / 2]) / 2.0
    };
    LogEfficiency { score: Some(median), unreachable, total }
}
