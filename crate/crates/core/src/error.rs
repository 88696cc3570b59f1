use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A data value that breaks the declared contract of its source.
    #[error("input error: {0}")]
    Input(String),
    /// A bounded structure was asked to grow past its declared capacity.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// An operation called on an object in the wrong state.
    #[error("invalid state: {0}")]
    State(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from user configuration rather than execution.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
