use std::path::{Path, PathBuf};

/// Failure of a subcommand, carrying the stable exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: parse error: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: non-finite value at {location}", path.display())]
    NonFinite { path: PathBuf, location: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("trial ids do not match: {0}")]
    IdMismatch(String),
    #[error(transparent)]
    Core(#[from] ace_core::Error),
}

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NO_RETAINED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingFile(path.to_path_buf())
        } else {
            CliError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    pub fn parse(path: &Path, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::MissingFile(_) | CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) if *e.root() == ace_core::Error::NoRetainedSpaces => EXIT_NO_RETAINED,
            _ => EXIT_FAILURE,
        }
    }
}
