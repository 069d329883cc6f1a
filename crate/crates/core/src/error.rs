use thiserror::Error;

use crate::autodiff::AutodiffError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied inputs that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Autodiff(#[from] AutodiffError),

    /// A loss, gradient or solver state stopped being finite.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code used by the CLI: 2 for usage errors, 3 for
    /// numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Autodiff(AutodiffError::ForeignTape) => 2,
            Error::Autodiff(_) | Error::Numerical(_) => 3,
            _ => 1,
        }
    }
}
