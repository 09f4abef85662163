use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QkdError {
    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("basis sequence has been retired and cannot be used again")]
    RetiredSequence,
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("invalid ensemble weights: {0}")]
    InvalidWeights(String),
    #[error("key of {key} bits is shorter than the {message}-bit message")]
    KeyTooShort { key: usize, message: usize },
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("strategy `{0}` requires the basis sequence to be granted to Eve")]
    StrategyNotGranted(&'static str),
    #[error("records do not cover {rounds} complete rounds of {m} positions")]
    IncompleteRounds { m: usize, rounds: usize },
    #[error("invalid bit character {0:?}")]
    InvalidBits(char),
}

pub type Result<T> = std::result::Result<T, QkdError>;

impl QkdError {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        QkdError::InvalidParam {
            field,
            reason: reason.into(),
        }
    }
}
