use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("coefficient horizon {horizon} does not cover {requested} iterations")]
    HorizonExceeded { horizon: usize, requested: usize },

    #[error("residual polynomial must satisfy P(0) = 1, got P(0) = {0}")]
    NotResidual(f64),

    #[error("operator is not skew-symmetric (max |A + Aᵀ| = {0:e})")]
    NotSkewSymmetric(f64),

    #[error("rank-deficient least-squares system ({rank} of {unknowns} unknowns determined)")]
    RankDeficient { rank: usize, unknowns: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn ensure_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
