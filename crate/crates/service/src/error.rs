use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

/// Machine-readable failure codes returned in every error body.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    UnknownMap,
    UnknownSession,
    IllegalAction,
    SessionFinished,
    MalformedRequest,
    InvalidQuestionnaire,
    NoModel,
    Storage,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::UnknownMap | ErrorCode::UnknownSession => StatusCode::NOT_FOUND,
            ErrorCode::IllegalAction | ErrorCode::MalformedRequest | ErrorCode::InvalidQuestionnaire => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ErrorCode::SessionFinished => StatusCode::CONFLICT,
            ErrorCode::NoModel => StatusCode::SERVICE_UNAVAILABLE,
            ErrorCode::Storage => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

#[derive(Serialize)]
struct Body<'a> {
    error: Inner<'a>,
}

#[derive(Serialize)]
struct Inner<'a> {
    code: ErrorCode,
    message: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body { error: Inner { code: self.code, message: &self.message } };
        (self.code.status(), Json(body)).into_response()
    }
}
