use thiserror::Error;

/// Error type shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported graph: {0}")]
    UnsupportedGraph(String),

    #[error("numeric failure: {context} (residual {residual:e})")]
    NumericFailure { context: String, residual: f64 },

    #[error("experiment failure: {0}")]
    ExperimentFailure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("archive error: {0}")]
    Archive(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::UnsupportedGraph(msg.into())
    }

    pub fn numeric(context: impl Into<String>, residual: f64) -> Self {
        Error::NumericFailure {
            context: context.into(),
            residual,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
