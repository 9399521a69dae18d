use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Failures of a runner command, grouped by exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Core(#[from] ehjb_core::Error),
}

pub type Result<T> = std::result::Result<T, RunError>;

/// Exit status for usage/config problems.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;

impl RunError {
    pub fn exit_code(&self) -> i32 {
        use ehjb_core::Error as E;
        match self {
            RunError::Usage(_) | RunError::Config(_) | RunError::Io { .. } => EXIT_USAGE,
            RunError::Core(E::Config(_) | E::Contract(_)) => EXIT_USAGE,
            RunError::Core(_) => EXIT_NUMERICAL,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> RunError {
        let path = path.into();
        move |source| RunError::Io { path, source }
    }
}
