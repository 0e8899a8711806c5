//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SphError>;

#[derive(Debug, Error)]
pub enum SphError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cell list overflowed its capacity; rebuild with a larger capacity")]
    NeighborOverflow,

    #[error("capacity exceeded for {what}: {got} > {limit}")]
    CapacityExceeded {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("solver instability at step {step} (t = {t:.6e}): {reason}")]
    Instability { step: u64, t: f64, reason: String },

    #[error("insufficient history: need {needed} frames, have {have}")]
    InsufficientHistory { needed: usize, have: usize },

    #[error("unknown case id: {0:?}")]
    UnknownCase(String),

    #[error("shape mismatch for {name}: expected {expected}, got {got}")]
    ShapeMismatch {
        name: String,
        expected: String,
        got: String,
    },

    #[error("missing key {0:?} in dataset file")]
    MissingKey(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: String, reason: String },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("predictor protocol violation at step {step}: {reason}")]
    PredictorProtocol { step: usize, reason: String },

    #[error(transparent)]
    Hdf5(#[from] hdf5::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
