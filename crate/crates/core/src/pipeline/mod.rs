//! End-to-end workflow: audio → fractional domain → normalized channels →
//! per-channel LSTM training → autoregressive generation → audio.

mod ablation;
mod generate;
mod prepare;
mod synth;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::AudioError;
use crate::dataset::DatasetError;
use crate::neural::{ModelShape, NeuralError, TrainConfig};
use crate::transforms::{Kernel, TransformError};

pub use ablation::{compare_arms, run_ablation, run_arm, AblationReport, ArmReport, REFERENCE_BASELINE_MSE, REFERENCE_FRFT_MSE};
pub use generate::{generate, teacher_forced_overlay, ChannelOverlay, GenerationResult, Predictor};
pub use prepare::{prepare, reconstruct};
pub use synth::{synth_tone_mix, Partial};
pub use train::{evaluate, loss_csv, train, EvalReport, NetReport, TrainReport, TrainedModels};

/// Which fractional-domain component a network models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Real,
    Imag,
}

/// Exit-status class of a pipeline failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Format,
    Config,
    Numerical,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("signal of {len} samples is too short: need {needed}")]
    SignalTooShort { len: usize, needed: usize },
    #[error("seed window at {start} does not fit a channel of {len} samples (window {window_len})")]
    SeedOutOfRange { start: usize, len: usize, window_len: usize },
    #[error("model expects {expected}, dataset provides {found}")]
    ModelMismatch { expected: String, found: String },
    #[error("{channel:?} network diverged in epoch {epoch}: {source}")]
    Diverged {
        channel: Channel,
        epoch: usize,
        #[source]
        source: NeuralError,
    },
}

impl PipelineError {
    pub fn class(&self) -> ErrorClass {
        match self {
            PipelineError::Audio(e) => match e {
                AudioError::IoFailure { .. } => ErrorClass::Io,
                _ => ErrorClass::Format,
            },
            PipelineError::Transform(e) => match e {
                TransformError::OrderOutOfRange(_) | TransformError::InvalidStft(_) => ErrorClass::Config,
                TransformError::NonFinite(_) => ErrorClass::Numerical,
                _ => ErrorClass::Format,
            },
            PipelineError::Dataset(e) => match e {
                DatasetError::IoFailure { .. } => ErrorClass::Io,
                DatasetError::InvalidFraction(_) => ErrorClass::Config,
                _ => ErrorClass::Format,
            },
            PipelineError::Neural(e) => match e {
                NeuralError::IoFailure { .. } => ErrorClass::Io,
                NeuralError::InvalidConfig(_) => ErrorClass::Config,
                NeuralError::NonFiniteLoss { .. } => ErrorClass::Numerical,
                _ => ErrorClass::Format,
            },
            PipelineError::InvalidConfig(_) => ErrorClass::Config,
            PipelineError::SignalTooShort { .. } => ErrorClass::Format,
            PipelineError::SeedOutOfRange { .. } => ErrorClass::Config,
            PipelineError::ModelMismatch { .. } => ErrorClass::Format,
            PipelineError::Diverged { .. } => ErrorClass::Numerical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub sample_rate_hz: u32,
    pub frft_order: f64,
    pub kernel: Kernel,
    pub window_len: usize,
    pub horizon: usize,
    /// Step between consecutive training windows.
    pub window_stride: usize,
    /// Step between consecutive evaluation windows.
    pub eval_stride: usize,
    pub train_fraction: f64,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub train: TrainConfig,
    /// Replace the transform with the identity and train a single real-channel network.
    pub ablation: bool,
    /// Train the two networks one after the other on the calling thread.
    pub single_thread: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 5000,
            frft_order: 0.05,
            kernel: Kernel::StandardChirp,
            window_len: 200,
            horizon: 1,
            window_stride: 1,
            eval_stride: 1,
            train_fraction: 0.8,
            hidden_size: 256,
            num_layers: 4,
            train: TrainConfig::default(),
            ablation: false,
            single_thread: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::InvalidConfig(msg));
        if self.sample_rate_hz == 0 {
            return bad("sample rate must be positive".into());
        }
        if !(-2.0..2.0).contains(&self.frft_order) {
            return bad(format!("fractional order {} outside [-2, 2)", self.frft_order));
        }
        if self.window_len == 0 || self.horizon == 0 {
            return bad("window and horizon must be positive".into());
        }
        if self.window_stride == 0 || self.eval_stride == 0 {
            return bad("strides must be positive".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train fraction {} must lie in (0, 1)", self.train_fraction));
        }
        if self.hidden_size == 0 || self.num_layers == 0 {
            return bad("hidden size and layer count must be positive".into());
        }
        self.train
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))
    }

    pub fn model_shape(&self) -> ModelShape {
        ModelShape {
            input_size: 1,
            hidden_size: self.hidden_size,
            output_size: self.horizon,
            num_layers: self.num_layers,
        }
    }

    /// Channels that get a network under this configuration.
    pub fn channels(&self) -> &'static [Channel] {
        if self.ablation {
            &[Channel::Real]
        } else {
            &[Channel::Real, Channel::Imag]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.sample_rate_hz, 5000);
        assert_eq!(c.frft_order, 0.05);
        assert_eq!(c.window_len, 200);
        assert_eq!((c.hidden_size, c.num_layers), (256, 4));
        assert_eq!(c.train.learning_rate, 3e-4);
        assert_eq!(c.train.batch_size, 32);
        assert_eq!(c.train.epochs, 30);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn json_overrides_and_rejects_unknown_keys() {
        let c: PipelineConfig =
            serde_json::from_str(r#"{"window_len": 50, "kernel": "paper", "train": {"epochs": 2}}"#).unwrap();
        assert_eq!(c.window_len, 50);
        assert_eq!(c.kernel, Kernel::PaperLiteral);
        assert_eq!(c.train.epochs, 2);
        assert_eq!(c.train.batch_size, 32);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"windowlen": 50}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut c = PipelineConfig::default();
        c.train.epochs = 0;
        assert_eq!(c.validate().unwrap_err().class(), ErrorClass::Config);
        let c = PipelineConfig {
            frft_order: 2.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = PipelineConfig {
            train_fraction: 1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
