use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across the library. The CLI maps each variant onto an exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied an out-of-contract argument (bad mode, rank, shape...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Generator parameters admit no valid model (e.g. a block probability above one).
    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Data loaded fine but does not match what the caller declared.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("numerical failure at iteration {iteration}: {message}")]
    Numerical { iteration: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
