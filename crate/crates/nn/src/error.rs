use eqsub_core::{ChainError, MapError, SampleError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("layer {index} ({kind}): {reason}")]
    Layer {
        index: usize,
        kind: &'static str,
        reason: String,
    },
    #[error("input does not match the model: {0}")]
    Input(String),
    #[error("cotangent does not match the model output: {0}")]
    Cotangent(String),
    #[error("parameters do not match the model: {0}")]
    Params(String),
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}
