use thiserror::Error;

/// Errors across generation, partitioning, sorting and the bench harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("key file format error: {0}")]
    Format(String),

    #[error("verification failed at index {index}: {what}")]
    Verification { index: usize, what: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
