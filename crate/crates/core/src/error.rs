use thiserror::Error;

pub type Result<T> = std::result::Result<T, SafeError>;

#[derive(Debug, Error)]
pub enum SafeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("synergy area `{sa_id}`: {reason}")]
    InvalidGroup { sa_id: String, reason: String },

    #[error("synergy area `{sa_id}` has {n_ae} AE variable(s), fewer than the synergy count {l}")]
    TooFewAes { sa_id: String, n_ae: usize, l: usize },

    #[error("matrix is not positive definite: pivot {index} is {pivot:e}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SafeError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SafeError::InvalidInput(msg.into())
    }
}
