//! Graph-edit retrosynthesis.

pub mod corpus;
pub mod tensor;
pub mod model;
pub mod molgraph;
pub mod pipeline;
pub mod reaction;
