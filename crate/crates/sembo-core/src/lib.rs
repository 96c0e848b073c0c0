//! String-embedding in-context Bayesian optimization.
//!
//! Candidates from flat, permutation, and choice search spaces are
//! serialized to canonical strings, embedded into fixed-length vectors,
//! regressed in context by a Transformer that outputs Gaussian predictions,
//! and optimized with a UCB acquisition driven by evolutionary optimizers.
//! The crate also ships the synthetic and combinatorial benchmark suites,
//! predictive/optimization metrics, and a pretraining loop for the
//! regressor.
//!
//! The numeric core is generic over the [`Scalar`] type; the aliases below
//! pin the two concrete widths. Verification paths and the CLI run at `f64`.

pub mod acquisition;
pub mod embed;
pub mod error;
pub mod fmt;
pub mod harness;
pub mod normalizer;
pub mod num;
pub mod objectives;
pub mod pretrain;
pub mod regressor;
pub mod rng;
pub mod space;
pub mod stats;
pub mod tensor;

pub use num::Scalar;
pub use space::{Candidate, ParamSpec, ParamValue, SearchSpace, TaskMetadata};

pub type Tensor32 = tensor::Tensor<f32>;
pub type Tensor64 = tensor::Tensor<f64>;
pub type Embedder32 = embed::Embedder<f32>;
pub type Embedder64 = embed::Embedder<f64>;
pub type EmbeddingVector32 = embed::EmbeddingVector<f32>;
pub type EmbeddingVector64 = embed::EmbeddingVector<f64>;
pub type RegressorParams32 = regressor::RegressorParams<f32>;
pub type RegressorParams64 = regressor::RegressorParams<f64>;
