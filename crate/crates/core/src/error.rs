use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::embedding::EmbedError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// The input data cannot be processed (empty training split, bad report file, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// An operation was called outside its domain.
    #[error("usage error: {0}")]
    Usage(String),

    /// Two structures that must agree do not.
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error(transparent)]
    Provider(#[from] EmbedError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
