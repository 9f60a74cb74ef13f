use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{0}")]
    CheckFailed(String),

    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] unitdemand::Error),
}

impl CliError {
    /// 0 success, 2 validation, 3 failed check, 4 size limit, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        use unitdemand::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 2,
            CliError::CheckFailed(_) => 3,
            CliError::Core(E::SizeLimit { .. }) => 4,
            CliError::Core(
                E::InvalidSpec { .. }
                | E::InvalidMarket(_)
                | E::InvalidArgument(_)
                | E::DomainError(_)
                | E::MarketMismatch,
            ) => 2,
            CliError::Io { .. } | CliError::Core(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
