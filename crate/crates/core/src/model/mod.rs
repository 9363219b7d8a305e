//! Neural components: graph encoder, edit scoring and leaving-group
//! classification.

mod edit;
mod encoder;
mod synthon;

use thiserror::Error;

use crate::reaction::ReactionError;
use crate::tensor::TensorError;

pub use edit::{
    edit_loss, multi_edit_loss, Candidate, CandidateSpace, EditHead, EditScores, MultiEditHead, MultiEditStep,
    ScoredEdit,
};
pub use encoder::{BatchedGraph, ConvReps, Encoder, Encodings, GlobalConv};
pub use synthon::{top_tokens, CompletionCandidate, CompletionInput, SynthonHead};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Reaction(#[from] ReactionError),
    #[error("inconsistent batch: {0}")]
    Batch(String),
    #[error("true edit {0} is not a candidate of its product")]
    EditNotCandidate(String),
    #[error("label {index} outside vocabulary of size {size}")]
    LabelOutOfRange { index: usize, size: usize },
}
