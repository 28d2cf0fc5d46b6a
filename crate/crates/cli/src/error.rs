use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    /// `path:line:column: message` for a document that failed to parse.
    pub fn parse(path: &Path, e: &serde_json::Error) -> Self {
        let msg = e.to_string();
        // serde_json appends " at line L column C"; the location moves to the front
        let bare = msg.split(" at line ").next().unwrap_or(&msg);
        CliError::Config(format!("{}:{}:{}: {bare}", path.display(), e.line(), e.column()))
    }
}

impl From<dnls_core::solver::SolverError> for CliError {
    fn from(e: dnls_core::solver::SolverError) -> Self {
        use dnls_core::solver::SolverError as S;
        match e {
            S::InvalidConfig(_) | S::FrameMismatch { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<dnls_core::field::FieldError> for CliError {
    fn from(e: dnls_core::field::FieldError) -> Self {
        use dnls_core::field::FieldError as F;
        match e {
            F::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<dnls_core::diagnostics::DiagnosticsError> for CliError {
    fn from(e: dnls_core::diagnostics::DiagnosticsError) -> Self {
        use dnls_core::diagnostics::DiagnosticsError as D;
        match e {
            D::Field(f) => f.into(),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
