use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario line {line}: {message}")]
    Scenario { line: usize, message: String },

    #[error("invalid scenario: {0}")]
    Invalid(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("magnitude grids differ: {0}")]
    MismatchedGrids(String),

    #[error(transparent)]
    Core(#[from] gridsub::Error),
}

impl SimError {
    /// Whether the error means the attack cannot be built for the given sets.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            SimError::Core(
                gridsub::Error::Infeasible(_)
                    | gridsub::Error::AmbiguousNullSpace { .. }
                    | gridsub::Error::EmptyFeasibleSpace(_)
            )
        )
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
