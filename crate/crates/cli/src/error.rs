use std::fmt;

/// Failure of a CLI command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad config, flags or inputs (exit 2).
    Validation(String),
    /// Unreadable, unwritable or malformed files (exit 3).
    Io(String),
    /// A numeric step failed on valid input (exit 4).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mbsts::Error> for CliError {
    fn from(e: mbsts::Error) -> Self {
        match e {
            mbsts::Error::Validation(m) => CliError::Validation(m),
            mbsts::Error::Numeric(m) => CliError::Numeric(m),
            mbsts::Error::Io(io) => CliError::Io(io.to_string()),
            mbsts::Error::Format(m) => CliError::Io(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
