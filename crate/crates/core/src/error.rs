use std::io;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent dimensions or an unusable configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Arguments that violate an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Malformed corpus, embedding or context-vector data.
    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },

    /// Alignment problems between a corpus and an auxiliary file.
    #[error("alignment error in sentence {sentence}: {message}")]
    Alignment { sentence: usize, message: String },

    /// Non-finite values during training or optimisation.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn data(line: usize, message: impl Into<String>) -> Self {
        Error::Data {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
