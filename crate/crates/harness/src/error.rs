use std::path::Path;

use thiserror::Error;

/// Failure categories, each with its own process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("modal solver failed: {0}")]
    Solver(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("{0}")]
    Io(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
}

impl HarnessError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Solver(_) => 3,
            Self::Training(_) => 4,
            Self::Io(_) => 5,
            Self::Simulation(_) => 6,
        }
    }
}

impl From<flexlink_core::DynamicsError> for HarnessError {
    fn from(e: flexlink_core::DynamicsError) -> Self {
        match e {
            flexlink_core::DynamicsError::Beam(b) => Self::Solver(b.to_string()),
            other => Self::Simulation(other.to_string()),
        }
    }
}

impl From<flexlink_core::closed_loop::LoopError> for HarnessError {
    fn from(e: flexlink_core::closed_loop::LoopError) -> Self {
        match e.source {
            flexlink_core::DynamicsError::Beam(b) => Self::Solver(b.to_string()),
            _ => Self::Simulation(e.to_string()),
        }
    }
}
