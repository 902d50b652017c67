use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("times must be strictly increasing (violation at index {0})")]
    NonMonotoneTimes(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("two-parameter value missing for pair ({0}, {1})")]
    MissingPair(usize, usize),

    #[error("solution escaped the guard |Y| <= {guard:e} at t = {time} (step {step})")]
    Explosion { time: f64, step: usize, guard: f64 },

    #[error("non-finite value produced at t = {time} (step {step})")]
    NonFinite { time: f64, step: usize },

    #[error("Picard iteration stopped contracting after {iterations} iterations (last distance {distance:e})")]
    NonContraction { iterations: usize, distance: f64 },

    #[error("circulant embedding is not positive semi-definite (min eigenvalue {0:e}) and the grid is too large for the dense fallback")]
    EmbeddingFailed(f64),

    #[error("averaged drift table does not cover x = {0} and no analytic drift is available")]
    TableOutOfRange(f64),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
