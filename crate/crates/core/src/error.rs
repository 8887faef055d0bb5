//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error ({context}): {message}")]
    Parse { context: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown viewpoint id `{0}`")]
    UnknownViewpoint(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("infeasible episode: {0}")]
    Infeasible(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("surgery error on sub-network `{subnet}`: {message}")]
    Surgery { subnet: String, message: String },

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("dependency error: stage `{required}` must run before `{stage}`")]
    Dependency { stage: String, required: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
