use std::ops::Range;

use ndarray::{Array2, ArrayView3};

use crate::audio_io::AudioClip;
use crate::dataset::{combine, window_starts, FeatureDataset};
use crate::neural::{predict_last, LstmModel, NeuralError};
use crate::transforms::ComplexSignal;

use super::prepare::to_audio;
use super::train::{batch_arrays, channel_data};
use super::{Channel, PipelineConfig, PipelineError};

const EVAL_CHUNK: usize = 256;

/// Anything that maps a batch of windows (`B × T × 1`) to next-sample
/// predictions (`B × horizon`).
pub trait Predictor: Sync {
    fn predict(&self, windows: ArrayView3<'_, f64>) -> Result<Array2<f64>, PipelineError>;
}

impl Predictor for LstmModel {
    fn predict(&self, windows: ArrayView3<'_, f64>) -> Result<Array2<f64>, PipelineError> {
        Ok(predict_last(self, windows)?)
    }
}

/// Teacher-forced predictions against ground truth for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOverlay {
    pub channel: Channel,
    /// Channel index of the first predicted sample of each window.
    pub positions: Vec<usize>,
    /// `positions.len() × horizon`, row-major.
    pub predicted: Vec<f64>,
    pub truth: Vec<f64>,
}

impl ChannelOverlay {
    pub fn mse(&self) -> f64 {
        let sum: f64 = self
            .predicted
            .iter()
            .zip(&self.truth)
            .map(|(p, t)| (p - t) * (p - t))
            .sum();
        sum / self.predicted.len() as f64
    }
}

/// Predictions from true history for every window of `data` in `range`.
pub fn teacher_forced_overlay(
    channel: Channel,
    model: &dyn Predictor,
    data: &[f64],
    range: Range<usize>,
    window_len: usize,
    horizon: usize,
    stride: usize,
) -> Result<ChannelOverlay, PipelineError> {
    let starts = window_starts(range, window_len, horizon, stride)?;
    let mut predicted = Vec::with_capacity(starts.len() * horizon);
    let mut truth = Vec::with_capacity(starts.len() * horizon);
    for chunk in starts.chunks(EVAL_CHUNK) {
        let (x, y) = batch_arrays(data, chunk, window_len, horizon);
        let pred = model.predict(x.view())?;
        if pred.dim() != y.dim() {
            return Err(PipelineError::ModelMismatch {
                expected: format!("{horizon} outputs per window"),
                found: format!("{} outputs", pred.ncols()),
            });
        }
        predicted.extend(pred.iter());
        truth.extend(y.iter());
    }
    Ok(ChannelOverlay {
        channel,
        positions: starts.iter().map(|s| s + window_len).collect(),
        predicted,
        truth,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    /// Normalized seed window followed by the generated samples, per channel.
    pub real_sequence: Vec<f64>,
    pub imag_sequence: Option<Vec<f64>>,
    /// Denormalized fractional-domain sequence fed to the inverse transform.
    pub signal: ComplexSignal,
    pub audio: AudioClip,
    /// Teacher-forced predictions over the generated span, where the dataset
    /// still has ground truth.
    pub overlay: Vec<ChannelOverlay>,
}

fn rollout(
    model: &dyn Predictor,
    seed: &[f64],
    n_samples: usize,
    horizon: usize,
) -> Result<Vec<f64>, PipelineError> {
    let w = seed.len();
    let mut seq = Vec::with_capacity(w + n_samples + horizon);
    seq.extend_from_slice(seed);
    while seq.len() < w + n_samples {
        let window = ArrayView3::from_shape((1, w, 1), &seq[seq.len() - w..]).expect("contiguous window");
        let next = model.predict(window)?;
        if next.len() != horizon {
            return Err(PipelineError::ModelMismatch {
                expected: format!("{horizon} outputs per window"),
                found: format!("{} outputs", next.len()),
            });
        }
        if let Some(bad) = next.iter().find(|v| !v.is_finite()) {
            return Err(NeuralError::NonFiniteLoss {
                step: seq.len() - w,
                grad_norm: *bad,
            }
            .into());
        }
        seq.extend(next.iter());
    }
    seq.truncate(w + n_samples);
    Ok(seq)
}

/// Autoregressive generation from the true window starting at `seed_start`.
///
/// `imag` must be present unless `config.ablation` is set. The seed window
/// plus `n_samples` predictions per channel are denormalized, recombined and
/// inverse-transformed into audio.
pub fn generate(
    real: &dyn Predictor,
    imag: Option<&dyn Predictor>,
    dataset: &FeatureDataset,
    config: &PipelineConfig,
    seed_start: usize,
    n_samples: usize,
) -> Result<GenerationResult, PipelineError> {
    config.validate()?;
    let w = dataset.window_len;
    if w != config.window_len || dataset.horizon != config.horizon {
        return Err(PipelineError::ModelMismatch {
            expected: format!("window {} horizon {}", config.window_len, config.horizon),
            found: format!("window {w} horizon {}", dataset.horizon),
        });
    }
    if seed_start + w > dataset.len() {
        return Err(PipelineError::SeedOutOfRange {
            start: seed_start,
            len: dataset.len(),
            window_len: w,
        });
    }
    if n_samples == 0 {
        return Err(PipelineError::InvalidConfig("n_samples must be at least 1".into()));
    }
    let imag = match (imag, config.ablation) {
        (_, true) => None,
        (Some(m), false) => Some(m),
        (None, false) => {
            return Err(PipelineError::InvalidConfig(
                "imaginary-channel model required outside ablation mode".into(),
            ))
        }
    };
    let seed_range = seed_start..seed_start + w;
    let real_sequence = rollout(real, &dataset.real_channel[seed_range.clone()], n_samples, dataset.horizon)?;
    let imag_sequence = imag
        .map(|m| rollout(m, &dataset.imag_channel[seed_range.clone()], n_samples, dataset.horizon))
        .transpose()?;

    let re = dataset.real_norm.invert(&real_sequence);
    let im = match &imag_sequence {
        Some(seq) => dataset.imag_norm.invert(seq),
        None => vec![0.0; re.len()],
    };
    let signal = combine(&re, &im)?;
    let audio = to_audio(&signal, config)?;

    let truth_end = (seed_start + w + n_samples).min(dataset.len());
    let mut overlay = Vec::new();
    if truth_end >= seed_start + w + dataset.horizon {
        let span = seed_start..truth_end;
        let mut models: Vec<(Channel, &dyn Predictor)> = vec![(Channel::Real, real)];
        if let Some(m) = imag {
            models.push((Channel::Imag, m));
        }
        for (channel, model) in models {
            overlay.push(teacher_forced_overlay(
                channel,
                model,
                channel_data(dataset, channel),
                span.clone(),
                w,
                dataset.horizon,
                1,
            )?);
        }
    }
    Ok(GenerationResult {
        real_sequence,
        imag_sequence,
        signal,
        audio,
        overlay,
    })
}
