use thiserror::Error;

/// Errors raised by the clustering engines and their supporting types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("remove from empty cluster")]
    EmptyCluster,
    #[error("numerical integrity error: {0}")]
    Numerical(String),
    #[error("insufficient chain: need at least {required} samples, have {available}")]
    InsufficientChain { required: usize, available: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
