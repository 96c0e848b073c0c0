//! Trial-token assembly and the history/target attention pattern.

use crate::embed::EmbeddingVector;
use crate::error::RegressorError;
use crate::num::Scalar;
use crate::tensor::{BoolMask, Tensor};

use super::RegressorConfig;

/// `(t+k) x (t+k)` pattern: position `(i, j)` may attend iff `j < t`, so
/// every token sees the whole history and nothing sees a target. With no
/// history at all each token degenerates to attending to itself.
pub fn attention_mask(t: usize, k: usize) -> BoolMask {
    let n = t + k;
    assert!(n >= 1, "mask needs at least one token");
    let mut data = vec![false; n * n];
    if t == 0 {
        for i in 0..n {
            data[i * n + i] = true;
        }
    } else {
        for i in 0..n {
            for j in 0..t {
                data[i * n + j] = true;
            }
        }
    }
    BoolMask::new(n, n, data)
}

/// Raw token features plus the attention mask. Row layout:
/// `[x_embed | m_embed (optional) | y | is_target]`; the model's input
/// projection maps rows into `d_model`.
#[derive(Debug, Clone)]
pub struct TokenBatch<T> {
    pub features: Tensor<T>,
    pub mask: BoolMask,
    pub history_len: usize,
    pub target_len: usize,
}

/// Assemble the input sequence: history trials `(x_embed, y_norm)` followed
/// by target embeddings carrying a dummy y of exactly 0 and indicator 1.
pub fn build_tokens<T: Scalar>(
    history: &[(EmbeddingVector<T>, f64)],
    targets: &[EmbeddingVector<T>],
    metadata: Option<&EmbeddingVector<T>>,
    config: &RegressorConfig,
) -> Result<TokenBatch<T>, RegressorError> {
    let t = history.len();
    let k = targets.len();
    assert!(t + k >= 1, "token batch needs at least one row");
    let d_embed = config.d_embed;
    for (x, _) in history {
        if x.dim() != d_embed {
            return Err(RegressorError::MixedEmbeddingDims { expected: d_embed, got: x.dim() });
        }
    }
    for x in targets {
        if x.dim() != d_embed {
            return Err(RegressorError::MixedEmbeddingDims { expected: d_embed, got: x.dim() });
        }
    }
    let meta = if config.use_metadata {
        let m = metadata.ok_or_else(|| {
            RegressorError::Config("config.use_metadata is set but no metadata embedding given".into())
        })?;
        if m.dim() != config.d_meta {
            return Err(RegressorError::MixedEmbeddingDims { expected: config.d_meta, got: m.dim() });
        }
        Some(m)
    } else {
        None
    };

    let width = config.input_dim();
    let mut data = Vec::with_capacity((t + k) * width);
    let mut push_row = |x: &EmbeddingVector<T>, y: f64, is_target: bool| {
        data.extend(x.values().iter().copied());
        if let Some(m) = meta {
            data.extend(m.values().iter().copied());
        }
        data.push(T::of(y));
        data.push(if is_target { T::one() } else { T::zero() });
    };
    for (x, y) in history {
        push_row(x, *y, false);
    }
    for x in targets {
        push_row(x, 0.0, true);
    }
    let features = Tensor::from_vec(t + k, width, data).expect("row construction is consistent");
    Ok(TokenBatch { features, mask: attention_mask(t, k), history_len: t, target_len: k })
}
