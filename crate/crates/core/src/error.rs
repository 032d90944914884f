use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid parameters: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("capacity exceeded: {entries} entries requested, limit is {limit}")]
    Capacity { entries: usize, limit: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("iterate became non-finite at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("degenerate output: {0}")]
    Degenerate(String),

    #[error("input error: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::Divergence { .. } | Error::Degenerate(_))
    }
}
