use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use geohop_core::graph::DoIError;
use geohop_core::layout::LayoutError;
use geohop_core::pipeline::PipelineError;
use geohop_core::transition::TransitionError;
use serde_json::json;

use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    pub fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} not found"))
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    pub fn internal(message: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "schema_version": SCHEMA_VERSION,
            "error": { "status": self.status.as_u16(), "message": self.message },
        });
        (self.status, Json(body)).into_response()
    }
}

impl From<TransitionError> for ApiError {
    fn from(e: TransitionError) -> Self {
        match e {
            TransitionError::UnknownVertex(id) => Self::not_found(format!("vertex '{id}'")),
            TransitionError::Antipodal => Self::unprocessable(e.to_string()),
            TransitionError::OutOfRange { .. } => Self::new(StatusCode::RANGE_NOT_SATISFIABLE, e.to_string()),
            other => Self::internal(other),
        }
    }
}

impl From<DoIError> for ApiError {
    fn from(e: DoIError) -> Self {
        match e {
            DoIError::UnknownVertex(id) => Self::not_found(format!("vertex '{id}'")),
            other => Self::unprocessable(other.to_string()),
        }
    }
}

impl From<LayoutError> for ApiError {
    fn from(e: LayoutError) -> Self {
        match e {
            LayoutError::UnknownVertex(id) => Self::not_found(format!("vertex '{id}'")),
            other => Self::internal(other),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Transition(t) => t.into(),
            PipelineError::NotMercator => Self::new(StatusCode::CONFLICT, e.to_string()),
            other => Self::internal(other),
        }
    }
}
