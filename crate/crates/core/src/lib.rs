//! Fractional-domain audio modeling: WAV I/O, fractional Fourier transforms,
//! windowed datasets, a from-scratch stacked LSTM and the pipeline tying them
//! together.

pub mod audio_io;
pub mod dataset;
pub mod neural;
pub mod pipeline;
pub mod transforms;

pub use audio_io::{read_wav, resample, write_wav, AudioClip, AudioError, WavSpec};
pub use dataset::{load_dataset, save_dataset, DatasetError, FeatureDataset, NormParams, WindowBatch};
pub use neural::{Checkpoint, LstmModel, ModelShape, NeuralError, OptimizerKind, TrainConfig};
pub use pipeline::{
    generate, prepare, reconstruct, run_ablation, train, AblationReport, Channel, ErrorClass, GenerationResult,
    PipelineConfig, PipelineError, TrainReport, TrainedModels,
};
pub use transforms::{frft, ifrft, ComplexSignal, FrftPlan, Kernel, Spectrogram, TransformError};
