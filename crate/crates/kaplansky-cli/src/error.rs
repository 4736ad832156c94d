//! CLI error kinds carrying the exit-code contract:
//! 0 ok, 1 domain failure, 2 parse failure, 3 not solvable,
//! 4 internal inconsistency.

use std::fmt;

use kaplansky_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input (exit 2).
    Parse(String),
    /// Valid file, inadmissible data: non-self-adjoint, non-finite,
    /// dimension conflicts (exit 1).
    Domain(String),
    /// The equation has no witness (exit 3).
    NotSolvable(String),
    /// Tolerance inconsistency detected after the fact (exit 4).
    Inconsistent(String),
}

impl CliError {
    pub fn parse(message: impl fmt::Display) -> Self {
        CliError::Parse(message.to_string())
    }

    pub fn domain(message: impl fmt::Display) -> Self {
        CliError::Domain(message.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Parse(_) => 2,
            CliError::NotSolvable(_) => 3,
            CliError::Inconsistent(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Domain(m) => write!(f, "error: {m}"),
            CliError::NotSolvable(m) => write!(f, "not solvable: {m}"),
            CliError::Inconsistent(m) => write!(f, "inconsistency: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(error: CoreError) -> Self {
        match error {
            CoreError::NotSolvable { .. } => CliError::NotSolvable(error.to_string()),
            CoreError::ResidualBound { .. } => CliError::Inconsistent(error.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(error: std::io::Error) -> Self {
        CliError::Parse(error.to_string())
    }
}
