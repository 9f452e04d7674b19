//! LSTM regressor for the Hurst exponent.
//!
//! The estimator reads a path through [`StandardizedIncrements`], which
//! makes it exactly invariant to affine changes `a*x + b + c*t` of the
//! input, runs a two-layer unidirectional LSTM over the one-dimensional
//! increment sequence, mean-pools the hidden states over time, and maps
//! the pooled vector to a scalar through a small MLP head.
//!
//! Everything here is hand-rolled: the forward pass, reverse-mode
//! gradients through the recurrence, and the AdamW loop that trains on
//! synthetic batches streamed straight out of the process generators.
//! Training never revisits a sequence, so validation loss is just the
//! loss on the next fresh batches.

mod backprop;
pub mod model;
pub mod preprocess;
pub mod serialize;
pub mod train;

pub use backprop::{loss_and_gradients, Gradients};
pub use model::{pack_sequences, Architecture, LstmModel, ModelMeta, Scalar};
pub use preprocess::StandardizedIncrements;
pub use serialize::{load_model, read_model, save_model, tensor_specs, write_model};
pub use train::{
    history_csv, train, EpochStats, LabeledBatch, LossKind, SequenceSource, SyntheticSource,
    TrainConfig, TrainOutcome,
};
