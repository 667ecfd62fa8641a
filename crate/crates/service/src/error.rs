use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

/// An HTTP error with a JSON body `{"error": ..., "stage": ...}`.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{status}: {message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub stage: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            stage: None,
        }
    }

    pub fn not_found(m: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, m)
    }

    pub fn conflict(m: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, m)
    }

    pub fn unprocessable(m: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, m)
    }

    pub fn internal(m: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, m)
    }

    /// A backend stage failed; the session is now in the `failed` state.
    pub fn failed(stage: &str, m: impl Into<String>) -> Self {
        Self {
            stage: Some(stage.to_owned()),
            ..Self::new(StatusCode::INTERNAL_SERVER_ERROR, m)
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(status = %self.status, stage = ?self.stage, "{}", self.message);
        }
        let body = match &self.stage {
            Some(stage) => json!({ "error": self.message, "stage": stage }),
            None => json!({ "error": self.message }),
        };
        (self.status, Json(body)).into_response()
    }
}
