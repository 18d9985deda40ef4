use std::path::PathBuf;
use std::process::ExitCode;

use toda_core::TodaError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] TodaError),
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } => ExitCode::from(3),
            CliError::Config(_) | CliError::Core(_) | CliError::Argument(_) => ExitCode::from(2),
        }
    }

    pub fn parse(path: &std::path::Path, e: &serde_json::Error) -> Self {
        CliError::Parse { path: path.to_path_buf(), line: e.line(), column: e.column(), message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
