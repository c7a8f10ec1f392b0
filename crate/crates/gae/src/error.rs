use std::path::PathBuf;

use eqsub_core::io::IoError;
use eqsub_core::{ChainError, GroupError, MapError, SampleError};
use eqsub_nn::NnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GaeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: usize, loss: f64 },
    #[error("missing artifact {0}")]
    Missing(PathBuf),
    #[error("{path}: line {line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Tensor(#[from] IoError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

pub(crate) fn file_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> GaeError {
    let path = path.into();
    move |source| GaeError::File { path, source }
}
