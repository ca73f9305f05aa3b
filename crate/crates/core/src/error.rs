use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid step index {0}: steps are numbered from 1")]
    InvalidStep(u64),

    #[error("shape mismatch for {what}: expected length {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {what} at coordinate {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Stable short name used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidStep(_) => "invalid_step",
            Error::Shape { .. } => "shape",
            Error::NonFinite { .. } => "numeric",
            Error::Config { .. } => "config",
            Error::Domain(_) => "domain",
            Error::Io(_) => "io",
            Error::Serialize(_) => "serialize",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
