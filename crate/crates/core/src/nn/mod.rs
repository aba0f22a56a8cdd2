//! Dense feed-forward classifier with manual backpropagation.
//!
//! Weights are stored `(fan_in, fan_out)` so a batch forward is `X·W + b`.
//! Dropout is applied to hidden-layer outputs only, never to the input or the
//! logits, using inverted scaling `1 / (1 − rate)` on survivors.

mod checkpoint;
mod model;
mod train;

pub use checkpoint::{Checkpoint, LayerRecord, CHECKPOINT_FORMAT_VERSION};
pub use model::{Activation, Architecture, Dense, Dropout, HeadKind, MlpModel};
pub use train::{
    fit, fit_with_pool, loss_and_gradients, train_step, BatchGradients, FitReport, Gradients, OodPool, Optimizer,
    OptimizerState, StepReport, TrainConfig,
};
