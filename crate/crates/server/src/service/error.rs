use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use durian_core::{SessionError, SpawnError};

use super::protocol::ErrorBody;
use crate::gate::GateError;
use crate::store::StoreError;

/// An error as the client sees it: status plus a stable machine code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "MALFORMED", message)
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "UNAUTHORIZED", "missing or expired token")
    }

    pub fn gate_required() -> Self {
        Self::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "GATE_REQUIRED",
            "start needs a verdict id from /gate/mask",
        )
    }

    pub fn no_session() -> Self {
        Self::new(StatusCode::NOT_FOUND, "NO_SESSION", "no round for this player")
    }

    pub fn no_provider() -> Self {
        Self::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "NO_PROVIDER",
            "no landmark provider is configured; send landmarks inline",
        )
    }

    pub fn gate(e: GateError) -> Self {
        match e {
            GateError::ProviderTimeout(_) => {
                Self::new(StatusCode::GATEWAY_TIMEOUT, "PROVIDER_TIMEOUT", e.to_string())
            }
            GateError::ProviderError(_) => Self::new(StatusCode::BAD_GATEWAY, "PROVIDER_ERROR", e.to_string()),
        }
    }

    pub fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string())
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody { code: self.code.to_owned(), message: self.message.clone() }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        use SessionError::*;
        let unprocessable = StatusCode::UNPROCESSABLE_ENTITY;
        let (status, code) = match &e {
            AlreadyInSession => (StatusCode::CONFLICT, "ALREADY_IN_SESSION"),
            NotPlaying => (unprocessable, "NOT_PLAYING"),
            NonMonotonicTimestamp { .. } => (unprocessable, "NON_MONOTONIC_TIMESTAMP"),
            EmptyBank => (StatusCode::INTERNAL_SERVER_ERROR, "EMPTY_BANK"),
            OutOfRange { .. } => (unprocessable, "OUT_OF_RANGE"),
            NotActive(_) => (unprocessable, "NOT_ACTIVE"),
            UnknownDurian(_) => (StatusCode::NOT_FOUND, "UNKNOWN_DURIAN"),
            UnknownQuestion(_) => (unprocessable, "UNKNOWN_QUESTION"),
            InvalidQuestion(..) | InvalidConfig(_) => (StatusCode::INTERNAL_SERVER_ERROR, "INVALID_CONFIG"),
            Geo(_) => (StatusCode::BAD_REQUEST, "INVALID_LOCATION"),
            Spawn(SpawnError::UnknownDurian(_)) => (StatusCode::NOT_FOUND, "UNKNOWN_DURIAN"),
            Spawn(SpawnError::NotActive(_)) => (unprocessable, "NOT_ACTIVE"),
            Spawn(_) => (unprocessable, "SPAWN_FAILED"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        use StoreError::*;
        let (status, code) = match &e {
            EmailTaken => (StatusCode::CONFLICT, "EMAIL_TAKEN"),
            BadCredentials => (StatusCode::UNAUTHORIZED, "BAD_CREDENTIALS"),
            Unauthorized => (StatusCode::UNAUTHORIZED, "UNAUTHORIZED"),
            UnknownPlayer(_) => (StatusCode::NOT_FOUND, "UNKNOWN_PLAYER"),
            UnknownItem(_) => (StatusCode::NOT_FOUND, "UNKNOWN_ITEM"),
            InsufficientPoints { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "INSUFFICIENT_POINTS"),
            InvalidInput(_) => (StatusCode::BAD_REQUEST, "INVALID_INPUT"),
            Corrupt { .. } | Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "STORAGE"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}
