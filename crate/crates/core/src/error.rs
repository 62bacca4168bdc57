//! Error type shared across the suite.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("benchmark `{0}` is already registered")]
    DuplicateBenchmark(String),

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("benchmark `{benchmark}` has no parameter `{key}`")]
    UnknownParam { benchmark: String, key: String },

    #[error("invalid value for parameter `{key}`: {message}")]
    InvalidParam { key: String, message: String },

    #[error("size class `custom` requires at least one --param override")]
    CustomRequiresParams,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid descriptor for `{benchmark}`: {message}")]
    InvalidDescriptor { benchmark: String, message: String },

    #[error("requested problem needs ~{required} bytes but only {available} look available")]
    ResourceExhausted { required: u64, available: u64 },

    #[error("records are not comparable: {0}")]
    NotComparable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed record: {0}")]
    Parse(String),
}

impl Error {
    pub fn invalid_param(key: &str, message: impl Into<String>) -> Self {
        Error::InvalidParam {
            key: key.to_string(),
            message: message.into(),
        }
    }
}
