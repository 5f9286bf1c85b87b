use thiserror::Error;

/// Errors produced by the core algorithms.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dense representation of {width} qubits exceeds the limit of {limit}")]
    WidthTooLarge { width: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("state is not normalized (norm {0:.12})")]
    NotNormalized(f64),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("operator does not preserve the requested particle-number sector")]
    SectorLeak,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
