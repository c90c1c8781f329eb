use thiserror::Error;

/// Harness failures, grouped by process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) | HarnessError::Io { .. } => 1,
            HarnessError::Numerical(_) => 2,
            HarnessError::Verification(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}

/// Maps a library error raised while running an algorithm.
pub(crate) fn numerical(e: feaslift::Error) -> HarnessError {
    match e {
        feaslift::Error::NumericalDivergence { .. } | feaslift::Error::Oracle(_) => HarnessError::Numerical(e.to_string()),
        other => HarnessError::Validation(other.to_string()),
    }
}

/// Maps a library error raised while building a problem.
pub(crate) fn validation(e: feaslift::Error) -> HarnessError {
    HarnessError::Validation(e.to_string())
}

pub type HResult<T> = std::result::Result<T, HarnessError>;
