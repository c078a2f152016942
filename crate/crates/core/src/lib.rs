//! Recovery of incomplete daily activity sequences with an insertion
//! transformer whose inputs pass through variable selection networks.
//!
//! The crate holds the numeric core (tensors and a reverse-mode tape), the
//! network and its decoder, the synthetic data pipeline, the trainer and the
//! evaluation metrics. Common types are re-exported at the root.

pub mod autograd;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod train;

pub use autograd::{Gradients, ParamId, ParamStore, Parameter, Tape, Var};
pub use data::{
    generate_population, build_samples, split_samples, Activity, ActivityCategory, DaySequence,
    GeneratorConfig, RecoverySample,
};
pub use error::{Error, Result};
pub use gradcheck::grad_check;
pub use metrics::{
    compare_transitions, evaluate, transition_analysis, MetricsReport, TransitionComparison,
    TransitionTable,
};
pub use model::{recover, recover_batch, Model, ModelConfig, Recovery};
pub use tensor::Tensor;
pub use train::{train, TrainConfig, TrainReport, Trainer};
