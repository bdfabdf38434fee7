use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FactError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FactError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("training diverged at epoch {epoch}, step {step}: {detail}")]
    Divergence { epoch: usize, step: usize, detail: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("undefined similarity: {0}")]
    UndefinedSimilarity(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },
}

impl FactError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FactError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the filesystem or undecodable files rather
    /// than by a bad parameter.
    pub fn is_io(&self) -> bool {
        matches!(self, FactError::Io { .. } | FactError::Image { .. })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> FactError {
    FactError::InvalidInput(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> FactError {
    FactError::Config(msg.into())
}
