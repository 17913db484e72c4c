use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use herodraft_core::{DraftState, Error as CoreError, HeroId};
use serde::{Deserialize, Serialize};

/// Machine-readable error codes carried in every error body.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    SessionNotFound,
    ModelNotFound,
    IllegalAction,
    DraftComplete,
    InvalidRequest,
    DimensionMismatch,
    Internal,
}

impl ErrorCode {
    fn status(self) -> StatusCode {
        match self {
            ErrorCode::SessionNotFound | ErrorCode::ModelNotFound => StatusCode::NOT_FOUND,
            ErrorCode::IllegalAction | ErrorCode::DraftComplete => StatusCode::CONFLICT,
            ErrorCode::InvalidRequest | ErrorCode::DimensionMismatch => StatusCode::BAD_REQUEST,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: ErrorCode,
    pub message: String,
    /// Heroes that may be chosen right now, on illegal-action errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legal_actions: Option<Vec<HeroId>>,
    /// The draft's current step, on illegal-action errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, thiserror::Error)]
#[error("{}", .0.message)]
pub struct ApiError(pub ErrorDetail);

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError(ErrorDetail {
            code,
            message: message.into(),
            legal_actions: None,
            step: None,
        })
    }

    pub fn code(&self) -> ErrorCode {
        self.0.code
    }

    pub fn session_not_found(id: &str) -> Self {
        Self::new(ErrorCode::SessionNotFound, format!("no session `{id}`"))
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::InvalidRequest, message)
    }

    pub fn draft_complete() -> Self {
        Self::new(ErrorCode::DraftComplete, "the draft is complete")
    }

    /// Rejection of `message` with the draft's legal actions attached.
    pub fn illegal(message: impl Into<String>, state: &DraftState) -> Self {
        let mut e = Self::new(ErrorCode::IllegalAction, message);
        e.0.legal_actions = Some(state.legal_actions());
        e.0.step = Some(state.step());
        e
    }

    /// Maps a core error raised while working on `state`.
    pub fn from_core(err: CoreError, state: Option<&DraftState>) -> Self {
        match (&err, state) {
            (CoreError::IllegalAction { .. }, Some(state)) => Self::illegal(err.to_string(), state),
            (CoreError::NoTurn, _) => Self::draft_complete(),
            (CoreError::Dimension { .. }, _) => {
                Self::new(ErrorCode::DimensionMismatch, err.to_string())
            }
            (
                CoreError::Config(_) | CoreError::IllegalQuery(_) | CoreError::IllegalAction { .. },
                _,
            ) => Self::invalid(err.to_string()),
            _ => Self::new(ErrorCode::Internal, err.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0.code.status(), Json(ErrorBody { error: self.0 })).into_response()
    }
}
