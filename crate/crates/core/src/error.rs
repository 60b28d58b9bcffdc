use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
///
/// The variants are coarse on purpose: the CLI maps each one onto a single
/// process exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} exceeds the size limit ({got} > {limit})")]
    SizeLimit {
        what: &'static str,
        limit: u64,
        got: u64,
    },

    #[error("infeasible moments: variance {variance} must be below mean*(1-mean) = {bound}")]
    InfeasibleMoments { variance: f64, bound: f64 },

    #[error("degenerate sample: zero variance")]
    DegenerateSample,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
