use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use rehearsal_core::gateway::GatewayError;
use rehearsal_core::{PipelineError, SessionError, StoreError};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::error;

use crate::dto::API_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    WrongPhase,
    ProviderFailure,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::WrongPhase => StatusCode::CONFLICT,
            ErrorCode::ProviderFailure => StatusCode::BAD_GATEWAY,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{code:?}: {message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    v: u32,
    error: &'a ApiError,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.code == ErrorCode::Internal {
            error!(message = %self.message, "internal error");
        }
        let body = ErrorBody {
            v: API_VERSION,
            error: &self,
        };
        (self.code.status(), Json(body)).into_response()
    }
}

impl From<GatewayError> for ApiError {
    fn from(e: GatewayError) -> Self {
        let code = match e {
            GatewayError::ProviderTimeout { .. }
            | GatewayError::ProviderRejected { .. }
            | GatewayError::MalformedResponse(_) => ErrorCode::ProviderFailure,
            GatewayError::MockRuleMiss(_)
            | GatewayError::UnboundPlaceholder { .. }
            | GatewayError::InvalidConfig(_) => ErrorCode::Internal,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Gateway(g) => g.into(),
            PipelineError::InvalidInput(m) => ApiError::bad_request(m),
            other => ApiError::new(ErrorCode::ProviderFailure, other.to_string()),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::WrongPhase { .. } => ApiError::new(ErrorCode::WrongPhase, e.to_string()),
            SessionError::EmptyMessage | SessionError::IndexOutOfRange { .. } => {
                ApiError::bad_request(e.to_string())
            }
            SessionError::Pipeline(p) => p.into(),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let code = match e {
            StoreError::ValidationFailure(_) => ErrorCode::BadRequest,
            StoreError::NotFound(_) => ErrorCode::NotFound,
            StoreError::Io { .. } | StoreError::Malformed { .. } => ErrorCode::Internal,
        };
        ApiError::new(code, e.to_string())
    }
}
