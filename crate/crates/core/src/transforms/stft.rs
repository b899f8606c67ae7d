use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::TransformError;
use crate::audio_io::AudioClip;

/// Magnitude short-time Fourier transform, `frames × (window_len/2 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Vec<Vec<f64>>,
    pub frame_hop: usize,
    pub window_len: usize,
    pub sample_rate_hz: u32,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    pub fn bin_frequency_hz(&self, bin: usize) -> f64 {
        bin as f64 * f64::from(self.sample_rate_hz) / self.window_len as f64
    }

    pub fn frame_time_secs(&self, frame: usize) -> f64 {
        (frame * self.frame_hop) as f64 / f64::from(self.sample_rate_hz)
    }
}

/// Hann-windowed STFT with `floor((n - window_len)/hop) + 1` frames.
pub fn stft(clip: &AudioClip, window_len: usize, hop: usize) -> Result<Spectrogram, TransformError> {
    if window_len < 16 {
        return Err(TransformError::InvalidStft(format!("window {window_len} < 16")));
    }
    if hop == 0 || hop > window_len {
        return Err(TransformError::InvalidStft(format!(
            "hop {hop} must be in 1..={window_len}"
        )));
    }
    let x = clip.samples();
    if x.len() < window_len {
        return Err(TransformError::SignalTooShort {
            len: x.len(),
            needed: window_len,
        });
    }
    let window: Vec<f64> = (0..window_len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / window_len as f64).cos())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(window_len);
    let frames = (x.len() - window_len) / hop + 1;
    let bins = window_len / 2 + 1;
    let mut buf = vec![Complex64::new(0.0, 0.0); window_len];
    let magnitudes = (0..frames)
        .map(|f| {
            let start = f * hop;
            for (slot, (s, w)) in buf.iter_mut().zip(x[start..start + window_len].iter().zip(&window)) {
                *slot = Complex64::new(s * w, 0.0);
            }
            fft.process(&mut buf);
            buf[..bins].iter().map(|c| c.norm()).collect()
        })
        .collect();
    Ok(Spectrogram {
        magnitudes,
        frame_hop: hop,
        window_len,
        sample_rate_hz: clip.sample_rate_hz(),
    })
}
