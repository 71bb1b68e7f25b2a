use serde::de::DeserializeOwned;
use std::fmt;

/// Command failure with its process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Malformed or schema-violating input, unknown labels, bad flags.
    Input(String),
    /// The computation itself failed (singular matrix, open loop, ...).
    Numeric(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        CliError::Numeric(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<screwkin::Error> for CliError {
    fn from(e: screwkin::Error) -> Self {
        use screwkin::Error as E;
        match e {
            E::Singular { .. } | E::ClosureViolation { .. } | E::Numeric(_) | E::NotSe3(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// Parse a JSON document, reporting syntax errors and schema violations with
/// their line and column.
pub fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| {
        let what = match e.classify() {
            serde_json::error::Category::Data => "does not match the schema",
            _ => "is not valid JSON",
        };
        CliError::input(format!("{source} {what} at line {} column {}: {e}", e.line(), e.column()))
    })
}
