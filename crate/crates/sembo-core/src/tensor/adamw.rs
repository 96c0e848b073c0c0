//! AdamW with global-norm gradient clipping and decoupled weight decay.

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::TensorError;
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub clip_norm: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { lr: 5e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 1e-5, clip_norm: 0.5 }
    }
}

/// Per-parameter moments plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamWState<T> {
    config: AdamWConfig,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
    step: u64,
}

impl<T: Scalar> AdamWState<T> {
    pub fn new(config: AdamWConfig, params: &[Tensor<T>]) -> Self {
        Self {
            config,
            m: params.iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect(),
            step: 0,
        }
    }

    pub fn config(&self) -> &AdamWConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update: clip the gradient set to the configured global norm, then
    /// apply bias-corrected AdamW with decoupled weight decay. Returns the
    /// pre-clip global gradient norm.
    pub fn step(
        &mut self,
        params: &mut [Tensor<T>],
        names: &[String],
        grads: &[Tensor<T>],
    ) -> Result<f64, TensorError> {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.m.len());
        for (i, g) in grads.iter().enumerate() {
            if !g.all_finite() {
                return Err(TensorError::NonFiniteGrad {
                    param: names.get(i).cloned().unwrap_or_else(|| format!("#{i}")),
                });
            }
            if g.shape() != params[i].shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "adamw_step",
                    lhs: params[i].shape().to_vec(),
                    rhs: g.shape().to_vec(),
                });
            }
        }

        let (norm, clip_scale) = global_norm_clip_scale(grads, self.config.clip_norm);

        self.step += 1;
        let t = self.step as i32;
        let c = &self.config;
        let bias1 = T::of(1.0 - c.beta1.powi(t));
        let bias2 = T::of(1.0 - c.beta2.powi(t));
        let beta1 = T::of(c.beta1);
        let beta2 = T::of(c.beta2);
        let one_m_beta1 = T::of(1.0 - c.beta1);
        let one_m_beta2 = T::of(1.0 - c.beta2);
        let lr = T::of(c.lr);
        let eps = T::of(c.eps);
        let decay = T::of(c.lr * c.weight_decay);
        let scale = T::of(clip_scale);

        for ((p, g), (m, v)) in
            params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..p.len() {
                let gi = g.data()[i] * scale;
                let mi = beta1 * m.data()[i] + one_m_beta1 * gi;
                let vi = beta2 * v.data()[i] + one_m_beta2 * gi * gi;
                m.data_mut()[i] = mi;
                v.data_mut()[i] = vi;
                let m_hat = mi / bias1;
                let v_hat = vi / bias2;
                let pi = p.data()[i];
                p.data_mut()[i] = pi - lr * m_hat / (v_hat.sqrt() + eps) - decay * pi;
            }
        }
        Ok(norm)
    }
}

/// Global gradient norm and the scale that brings it down to `clip_norm`
/// (1 when already within the budget).
pub fn global_norm_clip_scale<T: Scalar>(grads: &[Tensor<T>], clip_norm: f64) -> (f64, f64) {
    let mut norm_sq = 0.0f64;
    for g in grads {
        for &v in g.data() {
            let v = v.as_f64();
            norm_sq += v * v;
        }
    }
    let norm = norm_sq.sqrt();
    let scale = if norm > clip_norm && norm > 0.0 { clip_norm / norm } else { 1.0 };
    (norm, scale)
}
