//! Deterministic feature-hashing embedder.
//!
//! Stands in for a frozen language-model encoder: the downstream regressor
//! only needs a fixed string-to-vector map. Features are character n-grams
//! within whitespace-delimited tokens (the token itself when shorter than
//! n), hashed with FNV-1a into a signed d-dimensional accumulator,
//! average-pooled over the feature count, and L2-normalized.

use crate::rng::fnv1a;

/// Canonical f64 embedding of `text`. Empty feature sets give the zero
/// vector; everything else has unit L2 norm.
pub fn hash_embed(text: &str, d: usize, n: usize) -> Vec<f64> {
    assert!(d >= 8, "embedding dimension must be at least 8");
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut acc = vec![0.0f64; d];
    let mut count = 0usize;
    for token in text.split_whitespace() {
        let chars: Vec<char> = token.chars().collect();
        if chars.len() < n {
            add_feature(&mut acc, token);
            count += 1;
        } else {
            let mut buf = String::new();
            for window in chars.windows(n) {
                buf.clear();
                buf.extend(window.iter());
                add_feature(&mut acc, &buf);
                count += 1;
            }
        }
    }
    if count == 0 {
        return acc;
    }
    let inv = 1.0 / count as f64;
    for v in &mut acc {
        *v *= inv;
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut acc {
            *v /= norm;
        }
    }
    acc
}

fn add_feature(acc: &mut [f64], feature: &str) {
    let h = fnv1a(feature.as_bytes());
    let idx = (h % acc.len() as u64) as usize;
    let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
    acc[idx] += sign;
}
