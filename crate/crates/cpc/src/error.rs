use std::path::PathBuf;

use cpc_core::CpcError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] CpcError),
    #[error("{0}")]
    Config(String),
    #[error("instance generation failed: {0}")]
    Generation(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// Process exit code: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
