use std::path::PathBuf;

use qfi_core::QfiError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration could not be parsed or fails validation.
    #[error("invalid config: {message}")]
    Config {
        field: Option<String>,
        message: String,
    },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown figure `{0}`; expected one of 2b, 2c, 2d, 3a, 3b, 3c, 3d, 4a, 4b")]
    UnknownFigure(String),

    #[error("simulation failed: {0}")]
    Simulation(#[from] QfiError),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: Some(field.into()),
            message: message.into(),
        }
    }

    /// 2 for anything the user can fix in the input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Read { .. } | CliError::UnknownFigure(_) => 2,
            CliError::Write { .. } | CliError::Simulation(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "invalid_config",
            CliError::Read { .. } => "unreadable_config",
            CliError::Write { .. } => "output",
            CliError::UnknownFigure(_) => "unknown_figure",
            CliError::Simulation(_) => "simulation",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Config { field: Some(f), .. } = self {
            body["field"] = json!(f);
        }
        json!({ "error": body })
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
