use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use allocwise_core::ahp::AhpError;
use allocwise_core::allocation::AllocationError;
use allocwise_core::forecast::ForecastError;
use allocwise_core::store::StoreError;

/// Machine-readable error codes. The set is closed; clients may match on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    InvalidJson,
    InvalidMatrix,
    InvalidRequest,
    ValidationFailed,
    NotFound,
    MethodNotAllowed,
    Conflict,
    PayloadTooLarge,
    NonConvergent,
    Degenerate,
    InsufficientData,
    Timeout,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 13] = [
        Self::InvalidJson,
        Self::InvalidMatrix,
        Self::InvalidRequest,
        Self::ValidationFailed,
        Self::NotFound,
        Self::MethodNotAllowed,
        Self::Conflict,
        Self::PayloadTooLarge,
        Self::NonConvergent,
        Self::Degenerate,
        Self::InsufficientData,
        Self::Timeout,
        Self::Internal,
    ];

    pub fn status(self) -> StatusCode {
        match self {
            Self::InvalidJson | Self::InvalidMatrix | Self::InvalidRequest | Self::ValidationFailed => {
                StatusCode::BAD_REQUEST
            }
            Self::NotFound => StatusCode::NOT_FOUND,
            Self::MethodNotAllowed => StatusCode::METHOD_NOT_ALLOWED,
            Self::Conflict => StatusCode::CONFLICT,
            Self::PayloadTooLarge => StatusCode::PAYLOAD_TOO_LARGE,
            Self::NonConvergent | Self::Degenerate | Self::InsufficientData => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            Self::Timeout => StatusCode::GATEWAY_TIMEOUT,
            Self::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::InvalidJson => "invalid_json",
            Self::InvalidMatrix => "invalid_matrix",
            Self::InvalidRequest => "invalid_request",
            Self::ValidationFailed => "validation_failed",
            Self::NotFound => "not_found",
            Self::MethodNotAllowed => "method_not_allowed",
            Self::Conflict => "conflict",
            Self::PayloadTooLarge => "payload_too_large",
            Self::NonConvergent => "non_convergent",
            Self::Degenerate => "degenerate",
            Self::InsufficientData => "insufficient_data",
            Self::Timeout => "timeout",
            Self::Internal => "internal",
        }
    }
}

/// Body of every 4xx and 5xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            details: None,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn status(&self) -> StatusCode {
        self.code.status()
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

impl From<AhpError> for ApiError {
    fn from(e: AhpError) -> Self {
        match e {
            AhpError::NonConvergence { iterations, residual } => {
                ApiError::new(ErrorCode::NonConvergent, e.to_string()).with_details(
                    serde_json::json!({ "iterations": iterations, "residual": residual }),
                )
            }
            AhpError::Degenerate(_) => ApiError::new(ErrorCode::Degenerate, e.to_string()),
            _ => ApiError::new(ErrorCode::InvalidMatrix, e.to_string()),
        }
    }
}

impl From<AllocationError> for ApiError {
    fn from(e: AllocationError) -> Self {
        match e {
            AllocationError::Degenerate => ApiError::new(ErrorCode::Degenerate, e.to_string()),
            _ => ApiError::new(ErrorCode::ValidationFailed, e.to_string()),
        }
    }
}

impl From<ForecastError> for ApiError {
    fn from(e: ForecastError) -> Self {
        match e {
            ForecastError::InsufficientData { needed, got } => {
                ApiError::new(ErrorCode::InsufficientData, e.to_string())
                    .with_details(serde_json::json!({ "needed": needed, "got": got }))
            }
            ForecastError::InvalidConfig(_) => ApiError::new(ErrorCode::InvalidRequest, e.to_string()),
            ForecastError::Divergence { epoch } => ApiError::new(ErrorCode::NonConvergent, e.to_string())
                .with_details(serde_json::json!({ "epoch": epoch })),
            _ => ApiError::new(ErrorCode::ValidationFailed, e.to_string()),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound { kind, ref id } => ApiError::new(ErrorCode::NotFound, e.to_string())
                .with_details(serde_json::json!({ "kind": kind, "id": id })),
            StoreError::Conflict(_) => ApiError::new(ErrorCode::Conflict, e.to_string()),
            StoreError::Ahp(inner) => inner.into(),
            StoreError::Allocation(inner) => inner.into(),
            StoreError::Validation(_)
            | StoreError::InvalidId(_)
            | StoreError::UnsupportedSchema(_)
            | StoreError::Parse { .. }
            | StoreError::Row { .. } => ApiError::new(ErrorCode::ValidationFailed, e.to_string()),
            StoreError::Integrity(_) | StoreError::Corrupt { .. } | StoreError::Io { .. } => {
                tracing::error!(error = %e, "store failure");
                ApiError::new(ErrorCode::Internal, e.to_string())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_serialize_as_documented() {
        for c in ErrorCode::ALL {
            assert_eq!(serde_json::to_value(c).unwrap(), c.as_str());
            assert!(c.status().is_client_error() || c.status().is_server_error());
        }
    }
}
