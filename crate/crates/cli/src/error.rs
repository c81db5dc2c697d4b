use std::fmt;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or incomplete config (exit 2).
    Parse(String),
    /// Well-formed but invalid input (exit 3).
    Validation(String),
    /// Unreadable or unwritable files (exit 4).
    Io(String),
    /// NaN or infinity during computation (exit 5).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Io(_) => 4,
            CliError::Numeric(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "config error: {m}"),
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dcar_core::Error> for CliError {
    fn from(e: dcar_core::Error) -> Self {
        use dcar_core::Error as E;
        match e {
            E::InvalidParameter { .. } | E::ShapeMismatch(_) => CliError::Validation(e.to_string()),
            E::NonFinite(_) => CliError::Numeric(e.to_string()),
            E::Io { .. } | E::Format { .. } => CliError::Io(e.to_string()),
        }
    }
}
