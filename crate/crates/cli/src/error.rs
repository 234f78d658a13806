use std::fmt;
use std::path::PathBuf;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input, domain violations.
    Usage(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// The model could not be fitted or diagnosed.
    Model(bpreg::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Model(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Model(e) => write!(f, "model error: {e}"),
        }
    }
}

impl From<bpreg::Error> for CliError {
    fn from(e: bpreg::Error) -> Self {
        use bpreg::Error::*;
        match e {
            Domain { .. } | NonPositiveResponse { .. } | InvalidScheme(_) | InvalidConfig(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Model(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
