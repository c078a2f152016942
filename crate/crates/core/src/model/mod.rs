//! The insertion network, its training targets and loss, iterative decoding,
//! and checkpoint persistence.

pub mod checkpoint;
mod config;
mod decode;
mod network;
mod targets;

pub use config::{CovariateSchema, ModelConfig};
pub use decode::{apply_insertions, recover, recover_batch, Recovery};
pub use network::{
    positional_encoding, Forward, Model, SlotDistribution, BOS, EOS, NO_INSERT, SLOT_CLASSES,
    TOKEN_VOCAB,
};
pub use targets::{
    insertion_loss, insertion_targets, per_example_losses, target_distribution, TrainingExample,
};
