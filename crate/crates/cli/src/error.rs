use std::path::PathBuf;

use freeclt_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Divergent(String),
    #[error("{0} of {1} properties failed")]
    Verification(usize, usize),
}

impl CliError {
    /// 0 success, 1 invalid input, 2 solver failure, 3 divergent functional.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Read { .. } | CliError::Write { .. } => 1,
            CliError::Core(e) if e.is_solver_failure() => 2,
            CliError::Core(CoreError::Divergence(_) | CoreError::AmbiguousEndpoint(_)) => 3,
            CliError::Core(_) => 1,
            CliError::Divergent(_) => 3,
            CliError::Verification(..) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
