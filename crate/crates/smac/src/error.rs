use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SmacError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: line {line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] smac_core::Error),
}

pub type Result<T> = std::result::Result<T, SmacError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MISSING: i32 = 2;
pub const EXIT_SIGNAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

impl SmacError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING,
            Self::Config(_) | Self::Usage(_) => EXIT_USAGE,
            Self::Core(smac_core::Error::Parameter(_)) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}
