//! Parallel-clones training for a character-level recurrent network.
//!
//! A bank of weight-sharing clones sweeps a circular training sequence at
//! distinct phases; their single-step gradients are averaged and applied once
//! per sweep step. Because every clone's history is zeroed at the start of a
//! sweep, the mean loss at sweep step `q` measures how well the network
//! predicts with exactly `q − 1` steps of context, and stacking those per
//! iteration gives a loss surface over (iteration, history level).
//!
//! - [`corpus`]: vocabulary and encodings, plus the bundled Moby Dick excerpt
//! - [`network`]: the recurrent net, forward pass and single-step gradients
//! - [`clones`]: the parallel-clones engine and target-model trainer
//! - [`baseline`]: regular online training with non-active measurement clones
//! - [`recall`]: seeded free-running generation scored by edit distance
//! - [`metrics`]: loss surfaces, Levenshtein, Spearman, CSV and SVG output
//! - [`checkpoint`]: text checkpoints of the weights

pub mod baseline;
pub mod checkpoint;
pub mod clones;
pub mod config;
pub mod corpus;
pub mod error;
mod kernels;
pub mod metrics;
pub mod network;
pub mod recall;

pub use clones::{clone_indices, train_target, CloneBank, CloneEngine, SweepRecord};
pub use config::RunConfig;
pub use corpus::{Corpus, EncodedSequence, Vocabulary};
pub use error::{Error, Result};
pub use metrics::{CorrelationResult, LossSurface};
pub use network::{ActivationState, Dimensions, Gradients, NetworkParams};
pub use recall::{FeedbackMode, RecallResult};
