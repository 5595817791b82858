//! CLI error wrapper carrying the process exit code and a structured JSON
//! body. Exit codes: 0 success, 1 validation-tolerance breach, 2 config
//! error, 3 method-precondition failure, 4 numerical failure.

use serde::Serialize;
use simop_core::Error as CoreError;

#[derive(Debug)]
pub struct CliError {
    pub exit_code: i32,
    pub kind: String,
    pub message: String,
    pub stage: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    exit_code: i32,
    kind: &'a str,
    stage: &'a str,
    message: &'a str,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self {
            exit_code: 2,
            kind: "ConfigError".into(),
            message,
            stage: "config".into(),
        }
    }

    pub fn io(message: String) -> Self {
        Self {
            exit_code: 4,
            kind: "IoError".into(),
            message,
            stage: "output".into(),
        }
    }

    pub fn with_stage(mut self, stage: &str) -> Self {
        self.stage = stage.into();
        self
    }

    pub fn json_body(&self) -> String {
        serde_json::to_string_pretty(&ErrorBody {
            error: ErrorDetail {
                exit_code: self.exit_code,
                kind: &self.kind,
                stage: &self.stage,
                message: &self.message,
            },
        })
        .expect("error body serializes")
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let (exit_code, kind) = match &e {
            CoreError::WindowMismatch(_) => (2, "WindowMismatch"),
            CoreError::DimensionMismatch(_) => (2, "DimensionMismatch"),
            CoreError::InvalidParameter(_) => (2, "InvalidParameter"),
            CoreError::TooFewSamples { .. } => (2, "TooFewSamples"),
            CoreError::NoAdmissibleM { .. } => (3, "NoAdmissibleM"),
            CoreError::NoAdmissibleK { .. } => (3, "NoAdmissibleK"),
            CoreError::MaxIterExceeded { .. } => (3, "MaxIterExceeded"),
            CoreError::BallEscape { .. } => (3, "BallEscape"),
            CoreError::ZeroOperator(_) => (3, "ZeroOperator"),
            CoreError::SingularMatrix { .. } => (4, "SingularMatrix"),
            CoreError::EigenFailure { .. } => (4, "EigenFailure"),
            CoreError::QuadratureNonConvergence { .. } => (4, "QuadratureNonConvergence"),
        };
        Self {
            exit_code,
            kind: kind.into(),
            message: e.to_string(),
            stage: "method".into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", self.stage, self.kind, self.message)
    }
}

impl std::error::Error for CliError {}
