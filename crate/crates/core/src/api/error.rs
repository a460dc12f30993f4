use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::discover::DiscoverError;
use crate::graph::GraphError;
use crate::ingest::IngestError;
use crate::llm::LlmError;
use crate::prompts::{ParseFailure, PromptError};
use crate::sem::SemError;
use crate::store::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    Conflict,
    LlmFailure,
    ParseFailure,
    Internal,
}

impl ErrorCode {
    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::BadRequest => 400,
            ErrorCode::NotFound => 404,
            ErrorCode::Conflict => 409,
            ErrorCode::ParseFailure => 422,
            ErrorCode::LlmFailure => 502,
            ErrorCode::Internal => 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Conflict, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Internal, message)
    }
}

impl From<GraphError> for ApiError {
    fn from(e: GraphError) -> Self {
        let code = match &e {
            GraphError::UnknownEdge(_) | GraphError::UnknownVariable(_) | GraphError::UnknownModel(_) => {
                ErrorCode::NotFound
            }
            GraphError::Cycle(_)
            | GraphError::DuplicateEdge(..)
            | GraphError::NameCollision(_)
            | GraphError::AlreadyDirected(_)
            | GraphError::BothDirectionsCyclic(..) => ErrorCode::Conflict,
            _ => ErrorCode::BadRequest,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<DiscoverError> for ApiError {
    fn from(e: DiscoverError) -> Self {
        match e {
            DiscoverError::Graph(g) => g.into(),
            other => ApiError::bad_request(other.to_string()),
        }
    }
}

impl From<SemError> for ApiError {
    fn from(e: SemError) -> Self {
        let code = match e {
            SemError::Cyclic | SemError::StaleFit => ErrorCode::Conflict,
            _ => ErrorCode::BadRequest,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

impl From<PromptError> for ApiError {
    fn from(e: PromptError) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let code = match &e {
            StoreError::Locked(_) | StoreError::FingerprintMismatch { .. } => ErrorCode::Conflict,
            StoreError::Ingest(_) | StoreError::NoDataset => ErrorCode::BadRequest,
            StoreError::Graph(g) => return g.clone().into(),
            _ => ErrorCode::Internal,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<LlmError> for ApiError {
    fn from(e: LlmError) -> Self {
        let detail = match &e {
            LlmError::MissingFixture(key) | LlmError::FixtureExists(key) => json!({ "key": key }),
            LlmError::FixtureMismatch { key } => json!({ "key": key }),
            LlmError::AllFailed(errors) => json!({ "errors": errors }),
            _ => Value::Null,
        };
        ApiError::new(ErrorCode::LlmFailure, e.to_string()).with_detail(detail)
    }
}

impl From<ParseFailure> for ApiError {
    fn from(e: ParseFailure) -> Self {
        ApiError::new(ErrorCode::ParseFailure, e.reason.clone()).with_detail(json!({ "raw": e.raw }))
    }
}
