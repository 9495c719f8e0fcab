use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("unknown character {ch:?} at position {position}")]
    UnknownCharacter { ch: char, position: usize },

    #[error("index {index} out of range for size {size}")]
    OutOfRange { index: usize, size: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("corpus guard failed: expected {expected_len} characters with {expected_vocab} distinct, found {len} with {vocab}")]
    CorpusGuard {
        expected_len: usize,
        expected_vocab: usize,
        len: usize,
        vocab: usize,
    },

    /// A forward pass, gradient or update produced a NaN or infinity.
    #[error("numeric divergence: {0}")]
    Divergence(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("malformed {what} in {path}: {msg}")]
    Parse {
        what: &'static str,
        path: PathBuf,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
