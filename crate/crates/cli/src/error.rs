use std::fmt;

/// Failures that abort a run, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad config, unknown builtin, unwritable output, or a contract violation in the inputs.
    Config(String),
    /// A solver failed to converge or produced an unusable result.
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<evikit_core::Error> for CliError {
    fn from(e: evikit_core::Error) -> Self {
        match e {
            evikit_core::Error::Numerical { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
