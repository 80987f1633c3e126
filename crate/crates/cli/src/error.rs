use std::path::Path;

use thiserror::Error;
use wavetrain::error::Error as CoreError;

/// Failures of a command, each tied to one process exit code (usage errors never get this far:
/// argument parsing exits with 64 itself).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Solver(String),
    #[error("solution blew up; last finite time t = {0}")]
    BlowUp(f64),
    #[error("{0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Solver(_) => 2,
            Self::Validation(_) => 65,
            Self::Io(_) => 66,
            Self::BlowUp(_) => 70,
            Self::Divergence(_) => 71,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io(format!("{}: {e}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Argument(_) | CoreError::DimensionMismatch { .. } | CoreError::Range(_) => Self::Validation(msg),
            CoreError::Convergence { .. }
            | CoreError::Degenerate(_)
            | CoreError::Continuation { .. }
            | CoreError::Eigen { .. }
            | CoreError::BranchTracking { .. } => Self::Solver(msg),
            CoreError::BlowUp { t } => Self::BlowUp(t),
            CoreError::Singularity(_) | CoreError::Extraction(_) | CoreError::Divergence { .. } => Self::Divergence(msg),
            CoreError::Io(_) | CoreError::Json(_) => Self::Io(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
