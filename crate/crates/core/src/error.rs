use midas_engine::{DiagramError, FactorError, InferenceError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("schema: {0}")]
    Schema(String),
    #[error("parameters: {0}")]
    Params(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("case: {0}")]
    Case(String),
    #[error("observation dated {date} is not after the last entry ({last})")]
    OutOfOrder { date: String, last: String },
    #[error("the evidence has zero probability under the model")]
    Contradictory,
    #[error("blocking does not hold at step {0}")]
    NotBlocked(usize),
    #[error("climate normals: {0}")]
    Climate(String),
    #[error(transparent)]
    Inference(InferenceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<InferenceError> for CoreError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::ContradictoryEvidence => CoreError::Contradictory,
            other => CoreError::Inference(other),
        }
    }
}

impl From<DiagramError> for CoreError {
    fn from(e: DiagramError) -> Self {
        CoreError::Inference(e.into())
    }
}

impl From<FactorError> for CoreError {
    fn from(e: FactorError) -> Self {
        CoreError::Inference(e.into())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
