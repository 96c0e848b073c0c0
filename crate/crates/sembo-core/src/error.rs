//! Error types shared across the crate.

use thiserror::Error;

/// Search-space and candidate errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid candidate: {}", violations.join("; "))]
    InvalidCandidate { violations: Vec<String> },
    #[error("operation requires a flat search space, got {0}")]
    UnsupportedSpace(String),
}

/// Objective construction and evaluation errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("candidate has {got} parameters, objective expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot decode candidate value for parameter {name}: {reason}")]
    Decode { name: String, reason: String },
    #[error("unknown objective function {0:?}")]
    UnknownFunction(String),
    #[error("search space too large for exhaustive search: {size} candidates exceeds limit {limit}")]
    SpaceTooLarge { size: u128, limit: u128 },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Tensor and autodiff errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch { op: &'static str, lhs: Vec<usize>, rhs: Vec<usize> },
    #[error("non-finite output in {op}")]
    NonFinite { op: &'static str },
    #[error("masked softmax row {row} has no allowed column")]
    FullyMaskedRow { row: usize },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("non-finite gradient for parameter {param}")]
    NonFiniteGrad { param: String },
}

/// Embedder errors.
#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("text of {len} chars exceeds embedder limit {limit}")]
    TextTooLong { len: usize, limit: usize },
    #[error("embedding batch must be non-empty with non-empty texts")]
    EmptyBatch,
    #[error("remote embedding failed with status {status}: {body_excerpt}")]
    Remote { status: u16, body_excerpt: String },
    #[error("remote protocol error: {0}")]
    Protocol(String),
    #[error("remote request timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("invalid embedder config: {0}")]
    Config(String),
    #[error("cache i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Regressor and checkpoint errors.
#[derive(Debug, Error)]
pub enum RegressorError {
    #[error("invalid regressor config: {0}")]
    Config(String),
    #[error("mixed embedding dimensions: expected {expected}, got {got}")]
    MixedEmbeddingDims { expected: usize, got: usize },
    #[error("sigma {sigma} below configured floor {floor}")]
    SigmaBelowFloor { sigma: f64, floor: f64 },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Checkpoint serialization errors.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version: file has {found}, runtime expects {expected}")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("truncated file: expected {expected} more bytes, {present} present")]
    Truncated { expected: usize, present: usize },
    #[error("tensor {name}: shape {found:?} does not match config-derived {expected:?}")]
    ShapeMismatch { name: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("checkpoint missing tensor {0}")]
    MissingTensor(String),
    #[error("unexpected tensor {0} not derivable from config")]
    UnexpectedTensor(String),
    #[error("config blob: {0}")]
    Json(String),
}

/// Normalizer errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalizerError {
    #[error("normalizer requires at least 2 history values, got {0}")]
    TooFewValues(usize),
}

/// Acquisition-optimizer errors.
#[derive(Debug, Error)]
pub enum AcquisitionError {
    #[error("acquisition optimizer requires a flat space, got {0}")]
    UnsupportedSpace(String),
    #[error("evolution population is empty")]
    EmptyPopulation,
    #[error("invalid acquisition config: {0}")]
    Config(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Regressor(#[from] RegressorError),
    #[error(transparent)]
    Normalizer(#[from] NormalizerError),
}

/// Harness and configuration errors.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("objective evaluation failed at trial {trial}: {source}")]
    Objective { trial: usize, source: ObjectiveError },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Regressor(#[from] RegressorError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Normalizer(#[from] NormalizerError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
