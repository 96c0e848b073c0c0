//! Pluggable string embedders behind a caching front end.
//!
//! The built-in hashed backend is the deterministic default; the remote
//! backend speaks the `/v1/embed` protocol of an external model server.
//! Either way `embed` is a pure function of (backend config, text): results
//! are memoized in process and optionally persisted to disk, and the cache
//! never changes what a backend would have returned.

pub mod cache;
pub mod hashed;
pub mod remote;
pub mod stub;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::EmbedError;
use crate::num::Scalar;
use crate::rng::fnv1a;
use cache::FileCache;
use remote::RemoteClient;

/// Hard cap on input text length.
const MAX_TEXT_CHARS: usize = 100_000;

/// Fixed-length embedding of one string.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> EmbeddingVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Hashed,
    Remote,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedderConfig {
    pub backend: Backend,
    /// Output dimension of the hashed backend; the remote backend reports
    /// its own dimension and this field is ignored.
    pub dim: usize,
    /// Character n-gram order of the hashed backend.
    pub ngram: usize,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Remote request timeout in milliseconds.
    pub timeout_ms: u64,
    /// Inputs are clipped to this many characters before embedding
    /// (a stand-in for the usual model-side token clipping).
    pub max_chars: usize,
    /// In-process memoization bound; the map is flushed when it fills, which
    /// keeps long pretraining runs from hoarding memory. Results are
    /// unaffected (embedding is pure).
    pub cache_capacity: usize,
    pub cache_path: Option<PathBuf>,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Hashed,
            dim: 256,
            ngram: 3,
            endpoint: None,
            model: None,
            timeout_ms: 30_000,
            max_chars: 1_600,
            cache_capacity: 65_536,
            cache_path: None,
        }
    }
}

impl EmbedderConfig {
    pub fn remote(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            backend: Backend::Remote,
            endpoint: Some(endpoint.into()),
            model: Some(model.into()),
            ..Default::default()
        }
    }
}

enum BackendImpl {
    Hashed { dim: usize, ngram: usize },
    Remote(RemoteClient),
}

/// Caching embedder front end, safe for concurrent callers.
pub struct Embedder<T> {
    backend: BackendImpl,
    backend_id: u64,
    max_chars: usize,
    cache_capacity: usize,
    memory: Mutex<HashMap<String, EmbeddingVector<T>>>,
    file: Option<Mutex<FileCache<T>>>,
}

impl<T: Scalar> Embedder<T> {
    pub fn new(config: &EmbedderConfig) -> Result<Self, EmbedError> {
        if config.dim < 8 {
            return Err(EmbedError::Config(format!("dim must be >= 8, got {}", config.dim)));
        }
        if config.ngram < 1 {
            return Err(EmbedError::Config("ngram must be >= 1".into()));
        }
        if config.timeout_ms == 0 {
            return Err(EmbedError::Config("timeout must be positive".into()));
        }
        let backend = match config.backend {
            Backend::Hashed => BackendImpl::Hashed { dim: config.dim, ngram: config.ngram },
            Backend::Remote => {
                let endpoint = config
                    .endpoint
                    .as_deref()
                    .ok_or_else(|| EmbedError::Config("remote backend needs an endpoint".into()))?;
                let model = config.model.as_deref().unwrap_or("default");
                BackendImpl::Remote(RemoteClient::new(
                    endpoint,
                    model,
                    Duration::from_millis(config.timeout_ms),
                )?)
            }
        };
        let id_src = format!(
            "{:?}|{}|{}|{}|{}",
            config.backend,
            config.dim,
            config.ngram,
            config.endpoint.as_deref().unwrap_or(""),
            config.model.as_deref().unwrap_or("")
        );
        let file = match &config.cache_path {
            Some(path) => Some(Mutex::new(FileCache::open(path)?)),
            None => None,
        };
        Ok(Self {
            backend,
            backend_id: fnv1a(id_src.as_bytes()),
            max_chars: config.max_chars,
            cache_capacity: config.cache_capacity.max(16),
            memory: Mutex::new(HashMap::new()),
            file,
        })
    }

    /// Stable identity of (backend kind, dimension, n-gram order, endpoint,
    /// model); part of every persistent cache key.
    pub fn backend_id(&self) -> u64 {
        self.backend_id
    }

    /// Embed one string through the cache.
    pub fn embed(&self, text: &str) -> Result<EmbeddingVector<T>, EmbedError> {
        Ok(self.embed_batch(&[text])?.pop().expect("batch of one"))
    }

    /// Embed a batch; uncached texts go to the backend in one request.
    pub fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector<T>>, EmbedError> {
        let clipped: Vec<String> = texts
            .iter()
            .map(|t| {
                if t.chars().count() > MAX_TEXT_CHARS {
                    return Err(EmbedError::TextTooLong { len: t.chars().count(), limit: MAX_TEXT_CHARS });
                }
                Ok(clip_chars(t, self.max_chars))
            })
            .collect::<Result<_, _>>()?;

        let mut out: Vec<Option<EmbeddingVector<T>>> = vec![None; texts.len()];
        let mut misses: Vec<usize> = Vec::new();
        {
            let memory = self.memory.lock().expect("embed cache lock");
            for (i, key) in clipped.iter().enumerate() {
                if let Some(hit) = memory.get(key) {
                    out[i] = Some(hit.clone());
                } else {
                    misses.push(i);
                }
            }
        }
        if let (Some(file), false) = (&self.file, misses.is_empty()) {
            let file = file.lock().expect("file cache lock");
            misses.retain(|&i| {
                if let Some(values) = file.get(self.file_key(&clipped[i])) {
                    out[i] = Some(EmbeddingVector::new(values.clone()));
                    false
                } else {
                    true
                }
            });
        }

        if !misses.is_empty() {
            // Deduplicate identical texts within the batch.
            let mut unique: Vec<&str> = Vec::new();
            let mut slot: Vec<usize> = Vec::with_capacity(misses.len());
            for &i in &misses {
                match unique.iter().position(|u| *u == clipped[i]) {
                    Some(p) => slot.push(p),
                    None => {
                        unique.push(&clipped[i]);
                        slot.push(unique.len() - 1);
                    }
                }
            }
            let computed = self.compute(&unique)?;
            for (&i, &p) in misses.iter().zip(&slot) {
                out[i] = Some(computed[p].clone());
            }
            self.store(&misses, &clipped, &out)?;
        }

        // File-cache hits still need to land in process memory.
        {
            let mut memory = self.memory.lock().expect("embed cache lock");
            for (i, key) in clipped.iter().enumerate() {
                if !memory.contains_key(key) {
                    if memory.len() >= self.cache_capacity {
                        memory.clear();
                    }
                    memory.insert(key.clone(), out[i].clone().expect("filled above"));
                }
            }
        }
        Ok(out.into_iter().map(|v| v.expect("all slots filled")).collect())
    }

    fn compute(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector<T>>, EmbedError> {
        match &self.backend {
            BackendImpl::Hashed { dim, ngram } => Ok(texts
                .iter()
                .map(|t| {
                    EmbeddingVector::new(
                        hashed::hash_embed(t, *dim, *ngram).into_iter().map(T::of).collect(),
                    )
                })
                .collect()),
            BackendImpl::Remote(client) => {
                // The remote protocol rejects empty strings; embed a lone
                // space, which the hashed backend also maps to zero features.
                let safe: Vec<&str> = texts.iter().map(|t| if t.is_empty() { " " } else { *t }).collect();
                let raw = client.embed_batch(&safe)?;
                Ok(raw
                    .into_iter()
                    .map(|v| EmbeddingVector::new(v.into_iter().map(T::of).collect()))
                    .collect())
            }
        }
    }

    fn store(
        &self,
        misses: &[usize],
        keys: &[String],
        out: &[Option<EmbeddingVector<T>>],
    ) -> Result<(), EmbedError> {
        // First write wins; concurrent duplicate computes store one value.
        {
            let mut memory = self.memory.lock().expect("embed cache lock");
            for &i in misses {
                if memory.len() >= self.cache_capacity {
                    memory.clear();
                }
                memory
                    .entry(keys[i].clone())
                    .or_insert_with(|| out[i].clone().expect("computed"));
            }
        }
        if let Some(file) = &self.file {
            let mut file = file.lock().expect("file cache lock");
            for &i in misses {
                file.insert(self.file_key(&keys[i]), out[i].as_ref().expect("computed").values())?;
            }
        }
        Ok(())
    }

    fn file_key(&self, text: &str) -> u64 {
        let mut bytes = Vec::with_capacity(9 + text.len());
        bytes.extend_from_slice(&self.backend_id.to_le_bytes());
        bytes.push(0xFF);
        bytes.extend_from_slice(text.as_bytes());
        fnv1a(&bytes)
    }
}

fn clip_chars(text: &str, max_chars: usize) -> String {
    if text.chars().count() <= max_chars {
        text.to_string()
    } else {
        text.chars().take(max_chars).collect()
    }
}
