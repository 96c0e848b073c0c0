//! In-context Transformer regressor with Gaussian output heads.
//!
//! Trial tokens (embedding ⊕ normalized y ⊕ target indicator) are projected
//! into the model width and run through pre-norm attention/feed-forward
//! blocks under the history/target mask from [`tokens::attention_mask`].
//! There is no positional encoding over the trial axis: the history is a
//! set, which is what makes the permutation-invariance tests meaningful.
//! Each target row ends in a mean head and a softplus-plus-floor deviation
//! head.

pub mod checkpoint;
pub mod tokens;

use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingVector;
use crate::error::RegressorError;
use crate::num::Scalar;
use crate::rng::{rng_from_seed, sample_normal};
use crate::tensor::graph::{Graph, NodeId};
use crate::tensor::Tensor;
use tokens::{build_tokens, TokenBatch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressorConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    /// Dimension of the candidate embeddings fed in.
    pub d_embed: usize,
    /// Dimension of the metadata embedding (only read when `use_metadata`).
    pub d_meta: usize,
    pub use_metadata: bool,
    pub sigma_floor: f64,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        Self::desk_scale()
    }
}

impl RegressorConfig {
    /// Small configuration trainable on a CPU in minutes.
    pub fn desk_scale() -> Self {
        Self {
            d_model: 64,
            n_layers: 4,
            n_heads: 4,
            d_ff: 256,
            d_embed: 256,
            d_meta: 256,
            use_metadata: false,
            sigma_floor: 1e-3,
        }
    }

    /// The reference configuration at publication scale.
    pub fn paper_scale() -> Self {
        Self {
            d_model: 1024,
            n_layers: 8,
            n_heads: 16,
            d_ff: 4096,
            d_embed: 1024,
            d_meta: 1024,
            use_metadata: false,
            sigma_floor: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<(), RegressorError> {
        if self.d_model == 0 || self.n_layers == 0 || self.n_heads == 0 || self.d_ff == 0 {
            return Err(RegressorError::Config("all model dimensions must be positive".into()));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(RegressorError::Config(format!(
                "d_model {} must be divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.sigma_floor <= 0.0 {
            return Err(RegressorError::Config("sigma_floor must be positive".into()));
        }
        Ok(())
    }

    /// Width of a raw token row before the input projection.
    pub fn input_dim(&self) -> usize {
        self.d_embed + if self.use_metadata { self.d_meta } else { 0 } + 2
    }
}

/// Gaussian prediction for one target in normalized objective space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrediction {
    pub mu: f64,
    pub sigma: f64,
}

/// Named parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorParams<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
}

/// Shape table derived from a config; the checkpoint loader validates
/// against it and `init` allocates from it.
pub fn expected_shapes(config: &RegressorConfig) -> Vec<(String, Vec<usize>)> {
    let d = config.d_model;
    let mut shapes = vec![
        ("input_proj.w".to_string(), vec![config.input_dim(), d]),
        ("input_proj.b".to_string(), vec![1, d]),
    ];
    for layer in 0..config.n_layers {
        let p = |suffix: &str| format!("layer{layer}.{suffix}");
        shapes.extend([
            (p("attn.ln.gamma"), vec![1, d]),
            (p("attn.ln.beta"), vec![1, d]),
            (p("attn.wq"), vec![d, d]),
            (p("attn.bq"), vec![1, d]),
            (p("attn.wk"), vec![d, d]),
            (p("attn.bk"), vec![1, d]),
            (p("attn.wv"), vec![d, d]),
            (p("attn.bv"), vec![1, d]),
            (p("attn.wo"), vec![d, d]),
            (p("attn.bo"), vec![1, d]),
            (p("ff.ln.gamma"), vec![1, d]),
            (p("ff.ln.beta"), vec![1, d]),
            (p("ff.w1"), vec![d, config.d_ff]),
            (p("ff.b1"), vec![1, config.d_ff]),
            (p("ff.w2"), vec![config.d_ff, d]),
            (p("ff.b2"), vec![1, d]),
        ]);
    }
    shapes.extend([
        ("final.ln.gamma".to_string(), vec![1, d]),
        ("final.ln.beta".to_string(), vec![1, d]),
        ("head.mean.w".to_string(), vec![d, 1]),
        ("head.mean.b".to_string(), vec![1, 1]),
        ("head.dev.w".to_string(), vec![d, 1]),
        ("head.dev.b".to_string(), vec![1, 1]),
    ]);
    shapes
}

impl<T: Scalar> RegressorParams<T> {
    /// Xavier-initialized parameters; layer-norm gains start at 1, biases 0.
    pub fn init(config: &RegressorConfig, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for (name, shape) in expected_shapes(config) {
            let (rows, cols) = (shape[0], shape[1]);
            let last = name.rsplit('.').next().expect("non-empty name");
            let tensor = if last == "gamma" {
                Tensor::from_vec(rows, cols, vec![T::one(); rows * cols]).expect("shape")
            } else if last.starts_with('b') {
                Tensor::zeros(rows, cols)
            } else {
                let std = (2.0 / (rows + cols) as f64).sqrt();
                let data = (0..rows * cols).map(|_| T::of(sample_normal(&mut rng) * std)).collect();
                Tensor::from_vec(rows, cols, data).expect("shape")
            };
            names.push(name);
            tensors.push(tensor);
        }
        Self { names, tensors }
    }

    pub fn from_named(pairs: Vec<(String, Tensor<T>)>) -> Self {
        let (names, tensors) = pairs.into_iter().unzip();
        Self { names, tensors }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> &Tensor<T> {
        let i = self.index_of(name).unwrap_or_else(|| panic!("unknown parameter {name}"));
        &self.tensors[i]
    }

    /// Total scalar count across all tensors.
    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }
}

/// Handles to all parameter leaves inside one graph.
pub struct BoundParams {
    ids: Vec<NodeId>,
    by_name: Vec<String>,
}

impl BoundParams {
    fn get(&self, name: &str) -> NodeId {
        let i = self
            .by_name
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        self.ids[i]
    }
}

/// Register every parameter as a graph leaf (for training backward passes).
pub fn bind_params<T: Scalar>(g: &mut Graph<T>, params: &RegressorParams<T>) -> BoundParams {
    let ids = params
        .tensors
        .iter()
        .enumerate()
        .map(|(i, t)| g.param(i, t.clone()))
        .collect();
    BoundParams { ids, by_name: params.names.clone() }
}

/// Run the Transformer over a token batch; returns `(mu, sigma)` nodes of
/// shape `[t+k, 1]` covering every row (history rows included).
pub fn forward<T: Scalar>(
    g: &mut Graph<T>,
    bound: &BoundParams,
    config: &RegressorConfig,
    batch: &TokenBatch<T>,
) -> Result<(NodeId, NodeId), RegressorError> {
    let mask = Rc::new(batch.mask.clone());
    let d = config.d_model;
    let dh = d / config.n_heads;
    let eps = T::of(1e-5);

    let features = g.leaf(batch.features.clone());
    let w_in = bound.get("input_proj.w");
    let b_in = bound.get("input_proj.b");
    let mut x = g.affine(features, w_in, b_in)?;

    for layer in 0..config.n_layers {
        let p = |suffix: &str| format!("layer{layer}.{suffix}");
        let h = {
            let gamma = bound.get(&p("attn.ln.gamma"));
            let beta = bound.get(&p("attn.ln.beta"));
            g.layer_norm(x, gamma, beta, eps)?
        };
        let q = g.affine(h, bound.get(&p("attn.wq")), bound.get(&p("attn.bq")))?;
        let k = g.affine(h, bound.get(&p("attn.wk")), bound.get(&p("attn.bk")))?;
        let v = g.affine(h, bound.get(&p("attn.wv")), bound.get(&p("attn.bv")))?;
        let mut heads = Vec::with_capacity(config.n_heads);
        let scale = T::of(1.0 / (dh as f64).sqrt());
        for head in 0..config.n_heads {
            let qh = g.narrow_cols(q, head * dh, dh)?;
            let kh = g.narrow_cols(k, head * dh, dh)?;
            let vh = g.narrow_cols(v, head * dh, dh)?;
            let scores = g.matmul_nt(qh, kh)?;
            let scores = g.scale(scores, scale)?;
            let probs = g.softmax_masked(scores, mask.clone())?;
            heads.push(g.matmul(probs, vh)?);
        }
        let ctx = g.concat_cols(&heads)?;
        let attn_out = g.affine(ctx, bound.get(&p("attn.wo")), bound.get(&p("attn.bo")))?;
        x = g.add(x, attn_out)?;

        let h2 = {
            let gamma = bound.get(&p("ff.ln.gamma"));
            let beta = bound.get(&p("ff.ln.beta"));
            g.layer_norm(x, gamma, beta, eps)?
        };
        let ff1 = g.affine(h2, bound.get(&p("ff.w1")), bound.get(&p("ff.b1")))?;
        let act = g.gelu(ff1)?;
        let ff2 = g.affine(act, bound.get(&p("ff.w2")), bound.get(&p("ff.b2")))?;
        x = g.add(x, ff2)?;
    }

    let h = g.layer_norm(x, bound.get("final.ln.gamma"), bound.get("final.ln.beta"), eps)?;
    let mu = g.affine(h, bound.get("head.mean.w"), bound.get("head.mean.b"))?;
    let dev_raw = g.affine(h, bound.get("head.dev.w"), bound.get("head.dev.b"))?;
    let dev_sp = g.softplus(dev_raw)?;
    let sigma = g.add_scalar(dev_sp, T::of(config.sigma_floor))?;
    Ok((mu, sigma))
}

/// Training loss for one task: forward over the batch, slice out the target
/// rows, and sum the Gaussian negative log-likelihood against the normalized
/// target values.
pub fn task_nll_graph<T: Scalar>(
    g: &mut Graph<T>,
    bound: &BoundParams,
    config: &RegressorConfig,
    batch: &TokenBatch<T>,
    target_ys: &[f64],
) -> Result<NodeId, RegressorError> {
    assert_eq!(target_ys.len(), batch.target_len, "one y per target row");
    assert!(batch.target_len >= 1, "loss needs at least one target");
    let (mu, sigma) = forward(g, bound, config, batch)?;
    let mu_t = g.narrow_rows(mu, batch.history_len, batch.target_len)?;
    let sigma_t = g.narrow_rows(sigma, batch.history_len, batch.target_len)?;
    let ys: Vec<T> = target_ys.iter().map(|&y| T::of(y)).collect();
    Ok(g.gaussian_nll_sum(mu_t, sigma_t, ys)?)
}

/// Gaussian predictions for `targets` given a normalized history, modeled
/// jointly in one forward pass. Predictions for a target do not depend on
/// which other targets are present.
pub fn predict<T: Scalar>(
    params: &RegressorParams<T>,
    config: &RegressorConfig,
    history: &[(EmbeddingVector<T>, f64)],
    targets: &[EmbeddingVector<T>],
    metadata: Option<&EmbeddingVector<T>>,
) -> Result<Vec<GaussianPrediction>, RegressorError> {
    config.validate()?;
    assert!(!targets.is_empty(), "predict needs at least one target");
    let batch = build_tokens(history, targets, metadata, config)?;
    let mut g = Graph::new();
    let bound = bind_params(&mut g, params);
    let (mu, sigma) = forward(&mut g, &bound, config, &batch)?;
    let t = batch.history_len;
    let k = batch.target_len;
    let mu_t = g.narrow_rows(mu, t, k)?;
    let sigma_t = g.narrow_rows(sigma, t, k)?;
    let mu_v = g.value(mu_t);
    let sigma_v = g.value(sigma_t);
    Ok((0..k)
        .map(|i| GaussianPrediction {
            mu: mu_v.data()[i].as_f64(),
            sigma: sigma_v.data()[i].as_f64(),
        })
        .collect())
}

/// Summed Gaussian negative log-likelihood over one task's targets.
pub fn nll_loss(
    preds: &[GaussianPrediction],
    ys_norm: &[f64],
    sigma_floor: f64,
) -> Result<f64, RegressorError> {
    assert_eq!(preds.len(), ys_norm.len());
    assert!(!preds.is_empty());
    let mut total = 0.0;
    for (p, &y) in preds.iter().zip(ys_norm) {
        // A deviation below the floor means the head contract was violated.
        if p.sigma < sigma_floor {
            return Err(RegressorError::SigmaBelowFloor { sigma: p.sigma, floor: sigma_floor });
        }
        let z = y - p.mu;
        total += p.sigma.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln() + z * z / (2.0 * p.sigma * p.sigma);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use rand::RngExt;

    fn tiny_config() -> RegressorConfig {
        RegressorConfig {
            d_model: 16,
            n_layers: 2,
            n_heads: 2,
            d_ff: 32,
            d_embed: 8,
            d_meta: 8,
            use_metadata: false,
            sigma_floor: 1e-3,
        }
    }

    fn random_embedding(rng: &mut SeededRng, d: usize) -> EmbeddingVector<f64> {
        EmbeddingVector::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    fn random_history(rng: &mut SeededRng, d: usize, t: usize) -> Vec<(EmbeddingVector<f64>, f64)> {
        (0..t).map(|_| (random_embedding(rng, d), rng.random_range(0.0..1.0))).collect()
    }

    #[test]
    fn config_validation() {
        assert!(RegressorConfig::desk_scale().validate().is_ok());
        assert!(RegressorConfig::paper_scale().validate().is_ok());
        let bad = RegressorConfig { n_heads: 3, ..RegressorConfig::desk_scale() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn init_is_deterministic_and_complete() {
        let config = tiny_config();
        let a = RegressorParams::<f64>::init(&config, 7);
        let b = RegressorParams::<f64>::init(&config, 7);
        assert_eq!(a, b);
        let c = RegressorParams::<f64>::init(&config, 8);
        assert_ne!(a, c);
        for (name, shape) in expected_shapes(&config) {
            assert_eq!(a.get(&name).shape(), &shape[..], "{name}");
        }
    }

    #[test]
    fn predictions_do_not_depend_on_other_targets() {
        let config = tiny_config();
        let params = RegressorParams::<f64>::init(&config, 3);
        let mut rng = rng_from_seed(11);
        let history = random_history(&mut rng, config.d_embed, 5);
        let targets: Vec<_> = (0..4).map(|_| random_embedding(&mut rng, config.d_embed)).collect();

        let joint = predict(&params, &config, &history, &targets, None).unwrap();
        for (i, target) in targets.iter().enumerate() {
            let solo = predict(&params, &config, &history, &[target.clone()], None).unwrap();
            assert_eq!(solo[0], joint[i], "target {i} changed with batch composition");
        }
    }

    #[test]
    fn history_permutation_leaves_predictions_unchanged() {
        use rand::seq::SliceRandom;
        let config = tiny_config();
        let params = RegressorParams::<f64>::init(&config, 5);
        let mut rng = rng_from_seed(13);
        let history = random_history(&mut rng, config.d_embed, 8);
        let target = [random_embedding(&mut rng, config.d_embed)];

        let base = predict(&params, &config, &history, &target, None).unwrap();
        for _ in 0..5 {
            let mut shuffled = history.clone();
            shuffled.shuffle(&mut rng);
            let out = predict(&params, &config, &shuffled, &target, None).unwrap();
            assert!((out[0].mu - base[0].mu).abs() <= 1e-6 * (1.0 + base[0].mu.abs()));
            assert!((out[0].sigma - base[0].sigma).abs() <= 1e-6 * (1.0 + base[0].sigma));
        }
    }

    #[test]
    fn empty_history_gives_identical_prior_for_identical_targets() {
        let config = tiny_config();
        let params = RegressorParams::<f64>::init(&config, 9);
        let mut rng = rng_from_seed(17);
        let x = random_embedding(&mut rng, config.d_embed);
        let out = predict(&params, &config, &[], &[x.clone(), x.clone(), x], None).unwrap();
        assert_eq!(out[0], out[1]);
        assert_eq!(out[1], out[2]);
    }

    #[test]
    fn sigma_respects_floor() {
        let config = tiny_config();
        let params = RegressorParams::<f64>::init(&config, 21);
        let mut rng = rng_from_seed(23);
        let history = random_history(&mut rng, config.d_embed, 6);
        for _ in 0..20 {
            let target = [random_embedding(&mut rng, config.d_embed)];
            let out = predict(&params, &config, &history, &target, None).unwrap();
            assert!(out[0].sigma >= config.sigma_floor);
            assert!(out[0].mu.is_finite());
        }
    }

    #[test]
    fn metadata_flag_changes_input_width_and_is_enforced() {
        let config = RegressorConfig { use_metadata: true, ..tiny_config() };
        assert_eq!(config.input_dim(), 8 + 8 + 2);
        let params = RegressorParams::<f64>::init(&config, 1);
        let mut rng = rng_from_seed(29);
        let target = [random_embedding(&mut rng, config.d_embed)];
        assert!(predict(&params, &config, &[], &target, None).is_err());
        let meta = random_embedding(&mut rng, config.d_meta);
        assert!(predict(&params, &config, &[], &target, Some(&meta)).is_ok());
    }

    #[test]
    fn nll_loss_reference_values() {
        let floor = 1e-3;
        let p = |mu: f64, sigma: f64| GaussianPrediction { mu, sigma };
        let one = nll_loss(&[p(0.7, 1.0)], &[0.7], floor).unwrap();
        assert!((one - 0.9189385332046727).abs() < 1e-12);
        let three = nll_loss(&[p(0.1, 1.0), p(0.5, 1.0), p(0.9, 1.0)], &[0.1, 0.5, 0.9], floor).unwrap();
        assert!((three - 3.0 * 0.9189385332046727).abs() < 1e-12);
        let off = nll_loss(&[p(0.0, 1.0)], &[1.0], floor).unwrap();
        assert!((off - 1.4189385332046727).abs() < 1e-12);
        assert!(matches!(
            nll_loss(&[p(0.0, 1e-4)], &[0.0], floor),
            Err(RegressorError::SigmaBelowFloor { .. })
        ));
    }

    #[test]
    fn f32_pipeline_runs() {
        let config = tiny_config();
        let params = RegressorParams::<f32>::init(&config, 3);
        let mut rng = rng_from_seed(31);
        let history: Vec<(EmbeddingVector<f32>, f64)> = (0..4)
            .map(|_| {
                let e = EmbeddingVector::new(
                    (0..config.d_embed).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
                );
                (e, 0.5)
            })
            .collect();
        let target =
            [EmbeddingVector::new((0..config.d_embed).map(|_| 0.1f32).collect())];
        let out = predict(&params, &config, &history, &target, None).unwrap();
        assert!(out[0].sigma >= config.sigma_floor as f64 - 1e-6);
    }
}
