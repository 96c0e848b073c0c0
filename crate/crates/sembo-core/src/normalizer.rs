//! Objective-value normalization fitted on a history of raw values.
//!
//! Three steps, applied in order: (1) z-score by the history mean and
//! standard deviation; (2) replace the "bad half" (values at or below the
//! median) by standard-normal quantiles of their ranks, `p = rank/(n+1)`
//! with ranks over the full sample and ties sharing their average rank;
//! (3) min-max scale so the history lands in `[0, 1]`, with out-of-range
//! values (incoming targets) damped through a log or sigmoid tail.
//!
//! The per-value map is materialized as a piecewise-linear interpolator over
//! the history knots with slope-one extrapolation, which keeps `apply`
//! monotone over all of R, including the rare adversarial histories where a
//! raw quantile replacement would invert against a nearby good-half value.

use serde::{Deserialize, Serialize};

use crate::error::NormalizerError;
use crate::stats::normal_inv_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Damping {
    #[default]
    Log,
    Sigmoid,
}

/// Frozen normalization state; immutable after [`Normalizer::fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    mean: f64,
    std: f64,
    /// `(z, mapped)` knots sorted by z with non-decreasing ordinates.
    knots: Vec<(f64, f64)>,
    lo: f64,
    hi: f64,
    damping: Damping,
    degenerate: bool,
}

impl Normalizer {
    pub fn fit(ys: &[f64]) -> Result<Self, NormalizerError> {
        Self::fit_with(ys, Damping::Log)
    }

    pub fn fit_with(ys: &[f64], damping: Damping) -> Result<Self, NormalizerError> {
        let n = ys.len();
        if n < 2 {
            return Err(NormalizerError::TooFewValues(n));
        }
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std == 0.0 || !std.is_finite() {
            return Ok(Self {
                mean,
                std: 1.0,
                knots: Vec::new(),
                lo: 0.0,
                hi: 1.0,
                damping,
                degenerate: true,
            });
        }

        let mut sorted = ys.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite history"));
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };

        // Average 1-based rank per distinct value.
        let mut knots: Vec<(f64, f64)> = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j < n && sorted[j] == sorted[i] {
                j += 1;
            }
            let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1..=j
            let y = sorted[i];
            let z = (y - mean) / std;
            let mapped = if y <= median {
                normal_inv_cdf(avg_rank / (n as f64 + 1.0))
            } else {
                z
            };
            knots.push((z, mapped));
            i = j;
        }
        // Quantile replacement can exceed a nearby good-half z-score; flatten
        // so the map stays monotone.
        let mut running = f64::NEG_INFINITY;
        for k in &mut knots {
            running = running.max(k.1);
            k.1 = running;
        }
        let lo = knots.first().expect("non-empty").1;
        let hi = knots.last().expect("non-empty").1;
        if !(hi - lo).is_finite() || hi - lo <= 0.0 {
            return Ok(Self {
                mean,
                std: 1.0,
                knots: Vec::new(),
                lo: 0.0,
                hi: 1.0,
                damping,
                degenerate: true,
            });
        }
        Ok(Self { mean, std, knots, lo, hi, damping, degenerate: false })
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Normalize one raw value through the frozen state. History values land
    /// in `[0, 1]`; values beyond the fitted range are damped.
    pub fn apply(&self, y: f64) -> f64 {
        if self.degenerate {
            return 0.5;
        }
        let z = (y - self.mean) / self.std;
        let v = self.interpolate(z);
        let u = (v - self.lo) / (self.hi - self.lo);
        match self.damping {
            Damping::Log => {
                if u > 1.0 {
                    1.0 + u.ln()
                } else if u < 0.0 {
                    -(1.0 - u).ln()
                } else {
                    u
                }
            }
            Damping::Sigmoid => {
                if u > 1.0 {
                    2.0 * sigmoid(2.0 * (u - 1.0))
                } else if u < 0.0 {
                    2.0 * sigmoid(2.0 * u) - 1.0
                } else {
                    u
                }
            }
        }
    }

    pub fn apply_all(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.apply(y)).collect()
    }

    fn interpolate(&self, z: f64) -> f64 {
        let knots = &self.knots;
        let first = knots[0];
        let last = knots[knots.len() - 1];
        if z <= first.0 {
            return first.1 + (z - first.0);
        }
        if z >= last.0 {
            return last.1 + (z - last.0);
        }
        // Binary search for the bracketing pair.
        let mut lo = 0;
        let mut hi = knots.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if knots[mid].0 <= z {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (z0, m0) = knots[lo];
        let (z1, m1) = knots[hi];
        m0 + (m1 - m0) * (z - z0) / (z1 - z0)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::stats::normal_inv_cdf;
    use rand::RngExt;

    /// Literal three-step reference, valid on histories without rank
    /// inversions: z-score, quantile-replace the bad half, min-max scale.
    fn straight_line_reference(ys: &[f64]) -> Vec<f64> {
        let n = ys.len();
        let mean = ys.iter().sum::<f64>() / n as f64;
        let std = (ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64).sqrt();
        let mut sorted = ys.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        let rank_of = |y: f64| {
            let below = sorted.iter().filter(|&&s| s < y).count();
            let equal = sorted.iter().filter(|&&s| s == y).count();
            (below + 1 + below + equal) as f64 / 2.0
        };
        let step2: Vec<f64> = ys
            .iter()
            .map(|&y| {
                if y <= median {
                    normal_inv_cdf(rank_of(y) / (n as f64 + 1.0))
                } else {
                    (y - mean) / std
                }
            })
            .collect();
        let lo = step2.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = step2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        step2.iter().map(|v| (v - lo) / (hi - lo)).collect()
    }

    #[test]
    fn history_extremes_map_to_zero_and_one() {
        let ys = [3.0, -1.0, 7.5, 2.2, 0.4, 5.9];
        let norm = Normalizer::fit(&ys).unwrap();
        let mapped = norm.apply_all(&ys);
        assert!(mapped.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(mapped.iter().filter(|&&v| v == 0.0).count(), 1);
        assert_eq!(mapped.iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(norm.apply(-1.0), 0.0);
        assert_eq!(norm.apply(7.5), 1.0);
    }

    #[test]
    fn matches_straight_line_reference() {
        // Fixtures are inversion-free: the literal three-step reference is
        // itself monotone in y, so no flattening kicks in.
        let histories: [&[f64]; 3] = [
            &[2.0, 4.0, 6.0],
            &[-3.0, 0.5, 0.7, 1.9, 2.6, 4.4],
            &[10.0, 20.0, 15.0, 12.5, 30.0],
        ];
        for ys in histories {
            let want = straight_line_reference(ys);
            let mut order: Vec<usize> = (0..ys.len()).collect();
            order.sort_by(|&a, &b| ys[a].partial_cmp(&ys[b]).unwrap());
            assert!(
                order.windows(2).all(|w| want[w[0]] <= want[w[1]]),
                "fixture has a rank inversion"
            );
            let norm = Normalizer::fit(ys).unwrap();
            let got = norm.apply_all(ys);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn positive_affine_histories_normalize_identically() {
        let a = Normalizer::fit(&[2.0, 4.0, 6.0]).unwrap();
        let b = Normalizer::fit(&[20.0, 40.0, 60.0]).unwrap();
        for (y_a, y_b) in [(2.0, 20.0), (4.0, 40.0), (6.0, 60.0), (5.0, 50.0), (9.0, 90.0)] {
            assert!((a.apply(y_a) - b.apply(y_b)).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_invariance_over_random_histories() {
        let mut rng = rng_from_seed(41);
        for _ in 0..1000 {
            let n = rng.random_range(2..40usize);
            let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let a = rng.random_range(0.1..50.0);
            let b = rng.random_range(-100.0..100.0);
            let scaled: Vec<f64> = ys.iter().map(|y| a * y + b).collect();
            let base = Normalizer::fit(&ys).unwrap();
            let xform = Normalizer::fit(&scaled).unwrap();
            for _ in 0..5 {
                let probe = rng.random_range(-20.0..20.0);
                let d = (base.apply(probe) - xform.apply(a * probe + b)).abs();
                assert!(d <= 1e-9, "affine invariance broke by {d}");
            }
        }
    }

    #[test]
    fn constant_history_is_degenerate() {
        let norm = Normalizer::fit(&[5.0, 5.0, 5.0]).unwrap();
        assert!(norm.is_degenerate());
        assert_eq!(norm.apply(5.0), 0.5);
        assert_eq!(norm.apply(-100.0), 0.5);
        assert_eq!(norm.apply(1e12), 0.5);
    }

    #[test]
    fn too_few_values_is_an_error() {
        assert_eq!(Normalizer::fit(&[1.0]), Err(NormalizerError::TooFewValues(1)));
        assert_eq!(Normalizer::fit(&[]), Err(NormalizerError::TooFewValues(0)));
    }

    #[test]
    fn log_damping_formulas() {
        let norm = Normalizer::fit(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        // Far above the history: linear value v > 1 becomes 1 + ln(v).
        let big = norm.apply(1e6);
        assert!(big > 1.0);
        // Far below: v < 0 becomes -ln(1 - v).
        let small = norm.apply(-1e6);
        assert!(small < 0.0);
        // Monotone through both tails and continuous at the edges.
        assert!(norm.apply(3.0) == 1.0 && norm.apply(3.0 + 1e-12) >= 1.0);
    }

    #[test]
    fn damped_value_matches_one_plus_log() {
        // History with z-knots simple enough to invert by probing: find y
        // whose linear value is 1 + e, then check the damped output.
        let ys = [0.0, 1.0, 2.0, 3.0, 4.0];
        let norm = Normalizer::fit(&ys).unwrap();
        let target = 1.0 + std::f64::consts::E;
        // Linear tail above the max knot: u(y) is affine in y, so solve by
        // two probes.
        let (y1, y2) = (4.0, 14.0);
        let sigmoid_free = Normalizer::fit_with(&ys, Damping::Log).unwrap();
        let u = |y: f64| {
            // Invert the damping on the log tail: u = exp(out - 1).
            let out = sigmoid_free.apply(y);
            if out > 1.0 {
                (out - 1.0).exp()
            } else {
                out
            }
        };
        let (u1, u2) = (u(y1), u(y2));
        let y_star = y1 + (target - u1) * (y2 - y1) / (u2 - u1);
        let out = norm.apply(y_star);
        assert!((out - (1.0 + target.ln())).abs() < 1e-9, "got {out}");
        assert!((out - 2.3133).abs() < 1e-3);
    }

    #[test]
    fn sigmoid_damping_is_bounded_and_continuous() {
        let norm = Normalizer::fit_with(&[0.0, 1.0, 2.0], Damping::Sigmoid).unwrap();
        let hi = norm.apply(1e9);
        let lo = norm.apply(-1e9);
        assert!(hi > 1.0 && hi <= 2.0);
        assert!(lo < 0.0 && lo >= -1.0);
        assert!((norm.apply(2.0) - 1.0).abs() < 1e-12);
        assert!((norm.apply(0.0) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn apply_is_monotone_over_random_pairs() {
        let mut rng = rng_from_seed(17);
        for _ in 0..100 {
            let n = rng.random_range(2..30usize);
            let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let norm = Normalizer::fit(&ys).unwrap();
            for _ in 0..100 {
                let y1 = rng.random_range(-10.0..10.0);
                let y2 = rng.random_range(-10.0..10.0);
                let (a, b) = if y1 < y2 { (y1, y2) } else { (y2, y1) };
                assert!(
                    norm.apply(a) <= norm.apply(b),
                    "apply not monotone: {a} -> {}, {b} -> {}",
                    norm.apply(a),
                    norm.apply(b)
                );
            }
        }
    }

    #[test]
    fn monotone_even_on_adversarial_skewed_history() {
        // A tight cluster plus one huge outlier used to invert the quantile
        // replacement against the first good-half value.
        let ys = [0.0, 0.1, 0.2, 0.3, 100.0];
        let norm = Normalizer::fit(&ys).unwrap();
        let probes: Vec<f64> = (-20..=120).map(|i| i as f64 / 10.0).collect();
        for w in probes.windows(2) {
            assert!(norm.apply(w[0]) <= norm.apply(w[1]));
        }
        let mapped = norm.apply_all(&ys);
        assert!(mapped.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(norm.apply(0.0), 0.0);
        assert_eq!(norm.apply(100.0), 1.0);
    }
}
