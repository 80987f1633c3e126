use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("degenerate solution: {0}")]
    Degenerate(String),

    #[error("continuation failed after last good value {last_good}: {source}")]
    Continuation {
        last_good: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("eigensolver failure on {rows}x{rows} matrix at xi={xi}: {message}")]
    Eigen { xi: f64, rows: usize, message: String },

    #[error("branch tracking failed at xi={xi}: {message}; try a smaller xi_max")]
    BranchTracking { xi: f64, message: String },

    #[error("out of range: {0}")]
    Range(String),

    #[error("singular warp: {0}")]
    Singularity(String),

    #[error("solution blew up; last finite time t={t}")]
    BlowUp { t: f64 },

    #[error("modulation extraction failed: {0}")]
    Extraction(String),

    #[error("fixed-point iteration diverged at iteration {iteration}: {message}")]
    Divergence { iteration: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
