use serde::Serialize;

use crate::constraint::ConstraintError;

/// A request failure, shaped for both HTTP responses and CLI diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl ApiError {
    pub fn new(status: u16, error: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            error,
            message: message.into(),
            position: None,
            field: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(400, "BadRequest", message)
    }

    pub fn not_found(error: &'static str, message: impl Into<String>) -> Self {
        Self::new(404, error, message)
    }

    pub fn unprocessable(error: &'static str, message: impl Into<String>) -> Self {
        Self::new(422, error, message)
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }
}

impl From<ConstraintError> for ApiError {
    fn from(e: ConstraintError) -> Self {
        use tripplan_core::ltl::LtlError;
        let kind = match &e {
            ConstraintError::Text(LtlError::Syntax { .. }) => "SyntaxError",
            ConstraintError::Text(LtlError::UnknownVariable { .. }) => "UnknownVariable",
            ConstraintError::Text(LtlError::UnknownMode { .. }) => "UnknownMode",
            ConstraintError::Text(LtlError::UnsupportedProgression { .. }) => "UnsupportedProgression",
            ConstraintError::Tree { .. } => "InvalidConstraintTree",
        };
        let mut err = ApiError::unprocessable(kind, e.to_string());
        match e {
            ConstraintError::Text(t) => err.position = t.position(),
            ConstraintError::Tree { path, .. } => err.field = Some(format!("constraint{path}")),
        }
        err
    }
}
