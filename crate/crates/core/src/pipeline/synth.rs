use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::audio_io::{AudioClip, AudioError};

/// One sinusoidal component of a synthetic test signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partial {
    pub freq_hz: f64,
    pub amplitude: f64,
}

impl Partial {
    pub const fn new(freq_hz: f64, amplitude: f64) -> Self {
        Self { freq_hz, amplitude }
    }
}

/// Sum of sinusoids plus Gaussian noise whose standard deviation is
/// `noise_fraction` times the RMS of the clean mixture.
pub fn synth_tone_mix(
    duration_secs: f64,
    sample_rate_hz: u32,
    partials: &[Partial],
    noise_fraction: f64,
    seed: u64,
) -> Result<AudioClip, AudioError> {
    let n = (duration_secs * f64::from(sample_rate_hz)).round() as usize;
    if n == 0 {
        return Err(AudioError::EmptyInput);
    }
    let rate = f64::from(sample_rate_hz);
    let mut samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            partials.iter().map(|p| p.amplitude * (TAU * p.freq_hz * t).sin()).sum()
        })
        .collect();
    if noise_fraction > 0.0 {
        let rms = (samples.iter().map(|s| s * s).sum::<f64>() / n as f64).sqrt();
        let noise = Normal::new(0.0, noise_fraction * rms)
            .map_err(|e| AudioError::InvalidClip(format!("noise level: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut samples {
            *s += noise.sample(&mut rng);
        }
    }
    AudioClip::new(samples, sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_level() {
        let partials = [Partial::new(220.0, 0.5), Partial::new(330.0, 0.3)];
        let clean = synth_tone_mix(4.0, 5000, &partials, 0.0, 0).unwrap();
        let noisy = synth_tone_mix(4.0, 5000, &partials, 0.05, 7).unwrap();
        let rms = |v: &[f64]| (v.iter().map(|s| s * s).sum::<f64>() / v.len() as f64).sqrt();
        let diff: Vec<f64> = noisy.samples().iter().zip(clean.samples()).map(|(a, b)| a - b).collect();
        let ratio = rms(&diff) / rms(clean.samples());
        assert!((ratio - 0.05).abs() < 0.002, "{ratio}");
        assert_eq!(noisy, synth_tone_mix(4.0, 5000, &partials, 0.05, 7).unwrap());
    }
}
