use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented invariant.
    #[error("invalid configuration: `{field}` {reason}")]
    Config { field: &'static str, reason: String },

    /// An argument to a numeric routine is out of range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A matrix did not have the structure a routine requires (Hermitian, PSD, invertible).
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// A zero-forcing style combiner would have to invert a (numerically) singular matrix.
    #[error("degenerate combiner: {reason} (condition number {condition:e})")]
    DegenerateCombiner { reason: String, condition: f64 },

    /// The distributed SINR denominator came out nonpositive.
    #[error("inconsistent distributed moments for user {user}: denominator {denominator:e}")]
    MomentInconsistency { user: usize, denominator: f64 },

    /// Records or tables do not line up the way the caller promised.
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }
}
