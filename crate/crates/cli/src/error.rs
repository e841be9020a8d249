use serde::Serialize;
use std::path::PathBuf;
use thiserror::Error;

/// Process exit status. The numeric values are part of the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitCode {
    Success = 0,
    /// Output could not be written, or another failure outside the numerics.
    Internal = 1,
    Config = 2,
    Budget = 3,
    Numerical = 4,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    /// Well-formed file with a bad field; `field` is the dotted path.
    #[error("{path}: field `{field}`: {message}")]
    Field {
        path: PathBuf,
        field: String,
        message: String,
    },

    #[error("config: {0}")]
    Invalid(String),

    #[error(transparent)]
    Numerical(#[from] gapforge::Error),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {message}")]
    Data { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::ReadConfig { .. }
            | CliError::Syntax { .. }
            | CliError::Field { .. }
            | CliError::Invalid(_)
            | CliError::Data { .. } => ExitCode::Config,
            CliError::Numerical(_) => ExitCode::Numerical,
            CliError::Write { .. } => ExitCode::Internal,
        }
    }

    /// Error kind as it appears in the JSON error record.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ReadConfig { .. } => "config-read",
            CliError::Syntax { .. } => "config-syntax",
            CliError::Field { .. } => "config-field",
            CliError::Invalid(_) => "config-invalid",
            CliError::Numerical(_) => "numerical",
            CliError::Write { .. } => "write",
            CliError::Data { .. } => "data",
        }
    }

    /// Machine-readable record printed on stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code().code(),
            "message": self.to_string(),
        });
        match self {
            CliError::Field { field, .. } => v["field"] = field.clone().into(),
            CliError::Syntax { line, column, .. } => {
                v["line"] = (*line).into();
                v["column"] = (*column).into();
            }
            _ => {}
        }
        v
    }
}

/// Validation failures found before any computation are configuration
/// errors, not numerical ones.
pub fn invalid(e: gapforge::Error) -> CliError {
    CliError::Invalid(e.to_string())
}

pub type CliResult<T> = std::result::Result<T, CliError>;
