//! Training, checkpoints, beam-search inference and evaluation.

pub mod cli;
mod checkpoint;
mod config;
mod evaluate;
mod inference;
mod model;
mod train;

use thiserror::Error;

use crate::model::ModelError;
use crate::molgraph::SmilesError;
use crate::reaction::ReactionError;
use crate::tensor::TensorError;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use config::{Mode, TrainConfig};
pub use evaluate::{
    evaluate_topn, parse_predictions, write_predictions, Accuracy, PredictionBlock, TopNReport,
};
pub use inference::{
    beam_search, brute_force, complete_synthons, greedy, ensure_mapped, Completion, Prediction,
};
pub use model::{Example, GraphRetro};
pub use train::{train, train_examples, EpochLog, TrainCounters, TrainReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("data: {0}")]
    Data(String),
    #[error(transparent)]
    Reaction(#[from] ReactionError),
    #[error(transparent)]
    Smiles(#[from] SmilesError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
}

impl PipelineError {
    /// Process exit code: 1 usage or config, 2 data or files, 3 numeric
    /// failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::NonFiniteLoss { .. } => 3,
            PipelineError::Tensor(TensorError::NonFinite(_)) => 3,
            PipelineError::Model(ModelError::Tensor(TensorError::NonFinite(_))) => 3,
            _ => 2,
        }
    }
}

pub(crate) fn read_file(path: &str) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_string(),
        source,
    })
}

pub(crate) fn write_file(path: &str, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    std::fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.to_string(),
        source,
    })
}
