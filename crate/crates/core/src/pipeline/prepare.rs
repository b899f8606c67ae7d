use crate::audio_io::{resample, AudioClip};
use crate::dataset::{split_complex, split_intervals, DatasetError, FeatureDataset, NormParams};
use crate::transforms::{frft, ifrft, ComplexSignal};

use super::{PipelineConfig, PipelineError};

/// Resamples, transforms and normalizes `clip` into a two-channel dataset.
///
/// Normalization bounds come from the training interval only, so test values
/// may fall slightly outside `[-1, 1]`. With `config.ablation` the transform
/// is skipped and the imaginary channel is all zeros under identity bounds.
pub fn prepare(clip: &AudioClip, config: &PipelineConfig) -> Result<FeatureDataset, PipelineError> {
    config.validate()?;
    let audio = resample(clip, config.sample_rate_hz)?;
    let len = audio.len();
    let (train, _) = split_intervals(len, config.train_fraction, config.window_len, config.horizon).map_err(
        |e| match e {
            DatasetError::ResultingIntervalTooShort { needed, .. } => PipelineError::SignalTooShort {
                len,
                needed: (needed as f64 / config.train_fraction.min(1.0 - config.train_fraction)).ceil() as usize,
            },
            other => other.into(),
        },
    )?;
    let time = ComplexSignal::from_real(audio.samples())?;

    let (real_channel, imag_channel, real_norm, imag_norm) = if config.ablation {
        let re = time.re();
        let real_norm = NormParams::fit(&re[train.clone()])?;
        let identity = NormParams::new(-1.0, 1.0)?;
        (real_norm.apply(&re), vec![0.0; len], real_norm, identity)
    } else {
        let spectrum = frft(&time, config.frft_order, config.kernel)?;
        let (re, im) = split_complex(&spectrum)?;
        let real_norm = NormParams::fit(&re[train.clone()])?;
        let imag_norm = NormParams::fit(&im[train.clone()])?;
        (real_norm.apply(&re), imag_norm.apply(&im), real_norm, imag_norm)
    };
    Ok(FeatureDataset::new(
        real_channel,
        imag_channel,
        real_norm,
        imag_norm,
        config.window_len,
        config.horizon,
        train.end,
    )?)
}

/// Undoes [`prepare`] on `signal`, a denormalized fractional-domain sequence.
pub(crate) fn to_audio(
    signal: &ComplexSignal,
    config: &PipelineConfig,
) -> Result<AudioClip, PipelineError> {
    let time = if config.ablation {
        signal.clone()
    } else {
        ifrft(signal, config.frft_order, config.kernel)?
    };
    Ok(AudioClip::new(time.re(), config.sample_rate_hz)?)
}

/// Denormalizes and inverse-transforms the full dataset back to audio.
pub fn reconstruct(dataset: &FeatureDataset, config: &PipelineConfig) -> Result<AudioClip, PipelineError> {
    to_audio(&dataset.to_complex()?, config)
}
