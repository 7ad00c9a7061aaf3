//! Error type shared by all modules of the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A generator or solver parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// Malformed input data (adjacency lists, spectrum files, configs).
    #[error("format error: {0}")]
    Format(String),

    /// Matrix or vector dimensions do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Numeric-domain failure (non-symmetric input, eigenvalue below tolerance).
    #[error("numeric domain error: {0}")]
    Numeric(String),

    /// A caller-supplied object violates an operation's contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The objective returned a non-finite value; fitness functions must
    /// guard their own domain.
    #[error("non-finite fitness value at evaluation {evaluations}")]
    NonFiniteFitness { evaluations: u64 },

    /// Invalid experiment configuration.
    #[error("config error: {0}")]
    Config(String),

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
