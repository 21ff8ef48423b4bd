use thiserror::Error;

/// Errors raised by the estimators, samplers and experiment engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {function}: {message}")]
    Domain {
        function: &'static str,
        message: String,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is not symmetric: entries ({row},{col}) differ by {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("duplicate sample points: {first} and {second} coincide")]
    DuplicatePoints { first: usize, second: usize },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("experiment failed: {0}")]
    Experiment(String),
}

impl Error {
    pub(crate) fn domain(function: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            function,
            message: message.into(),
        }
    }

    /// True for errors caused by the data rather than by the caller's
    /// parameters (duplicates, degenerate covariance, non-finite values).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::DuplicatePoints { .. } | Error::NotPositiveDefinite { .. } | Error::InvalidSample(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
