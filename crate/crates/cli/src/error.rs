use std::path::PathBuf;

use serde::Serialize;
use ssep::SsepError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] SsepError),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("failed to emit config: {0}")]
    Emit(#[from] toml::ser::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("output encoding failed: {0}")]
    Encode(String),

    #[error("table `{table}` is not produced by `{command}`")]
    UnsupportedTable { table: String, command: String },
}

/// Machine-readable error written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorDocument {
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Model(e) => match e {
                SsepError::InvalidParams(_) => "invalid_params",
                SsepError::InvalidConfig(_) => "invalid_config",
                SsepError::Overflow { .. } => "state_space_overflow",
                SsepError::CapExceeded { .. } => "cap_exceeded",
                SsepError::Reducible => "reducible",
                SsepError::Singular(_) => "singular",
                SsepError::NotConverged { .. } => "not_converged",
                _ => "model_error",
            },
            CliError::Config(_) | CliError::Parse(_) => "invalid_config",
            CliError::Emit(_) => "config_emit",
            CliError::Io { .. } => "io",
            CliError::Encode(_) => "encode",
            CliError::UnsupportedTable { .. } => "unsupported_table",
        }
    }

    pub fn to_document(&self) -> ErrorDocument {
        let (states, cap) = match self {
            CliError::Model(SsepError::CapExceeded { states, cap }) => (Some(*states), Some(*cap)),
            _ => (None, None),
        };
        ErrorDocument {
            error: ErrorBody {
                kind: self.kind(),
                message: self.to_string(),
                states,
                cap,
            },
        }
    }
}
