//! Stacked LSTM regressor trained with backpropagation through time.

mod gradcheck;
mod loss;
mod lstm;
mod model;
mod optim;
mod train;

use thiserror::Error;

pub use gradcheck::{grad_check, relative_error};
pub use loss::{mse_grad, mse_loss};
pub use lstm::{
    backward, forward_batch, forward_sequence, lstm_cell_forward, predict_last, CellState, ForwardCache, GateCache,
};
pub use model::{
    init_model, Checkpoint, Gate, Gradients, LstmLayerParams, LstmModel, ModelShape, OutputHeadParams,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use optim::{clip_global_norm, optimizer_step, OptimizerKind, OptimizerState};
pub use train::{train_step, StepStats, TrainConfig};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty input")]
    EmptyInput,
    #[error("cache does not match this backward call: {0}")]
    CacheMismatch(String),
    #[error("not a model checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    VersionMismatch(u8),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at step {step} (gradient norm {grad_norm})")]
    NonFiniteLoss { step: usize, grad_norm: f64 },
    #[error("i/o error on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
