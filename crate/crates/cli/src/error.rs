use std::io;
use std::path::{Path, PathBuf};

use ptycho_wdd::WddError;

/// Process exit statuses.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const AMBIGUOUS_TYPE_I: i32 = 2;
    pub const AMBIGUOUS_TYPE_II: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid value for `{field}`: {reason}")]
    Usage { field: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Wdd(#[from] WddError),
}

impl CliError {
    pub fn usage(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Usage {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(reason: impl Into<String>) -> Self {
        CliError::Format(reason.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } | CliError::Io { .. } | CliError::Format(_) => exit::USAGE,
            CliError::Wdd(e) => match e {
                WddError::Dimension { .. }
                | WddError::InvalidParameter { .. }
                | WddError::Nonphysical { .. }
                | WddError::ZeroNorm(_)
                | WddError::NotPhaseObject { .. }
                | WddError::InsufficientDiagonals { .. } => exit::USAGE,
                _ => exit::NUMERICAL,
            },
        }
    }
}
