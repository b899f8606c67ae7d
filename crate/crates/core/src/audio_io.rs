//! WAV decode/encode and FFT-domain resampling.
//!
//! Only the canonical PCM subset is handled: a little-endian RIFF/WAVE
//! container with a `fmt ` chunk carrying format tag 1, 16-bit signed
//! samples, one or two channels, and a `data` chunk. Stereo input is
//! downmixed to mono by averaging. Everything downstream works on a mono
//! [`AudioClip`].

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

const PCM_FORMAT_TAG: u16 = 1;
const BITS_PER_SAMPLE: u16 = 16;
const DECODE_SCALE: f64 = 32768.0;
const ENCODE_SCALE: f64 = 32767.0;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed RIFF container: {0}")]
    MalformedRiff(String),
    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),
    #[error("truncated data chunk: declared {declared} bytes, found {found}")]
    TruncatedData { declared: usize, found: usize },
    #[error("audio input is empty")]
    EmptyInput,
    #[error("invalid audio clip: {0}")]
    InvalidClip(String),
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Mono sample buffer with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, AudioError> {
        if sample_rate_hz == 0 {
            return Err(AudioError::InvalidClip("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::InvalidClip(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }
}

/// Format fields from the `fmt ` chunk that survive validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavSpec {
    pub channels: u16,
    pub bits_per_sample: u16,
    pub sample_rate_hz: u32,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| AudioError::IoFailure {
        path: path.display().to_string(),
        source,
    })?;
    decode_wav(&bytes).map(|(clip, _)| clip)
}

/// Writes `clip` as mono 16-bit PCM and returns how many samples had to be clipped.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<usize, AudioError> {
    let path = path.as_ref();
    let (bytes, clipped) = encode_wav(clip);
    if clipped > 0 {
        log::warn!(
            "clipped {clipped} of {} samples outside [-1, 1] while writing {}",
            clip.len(),
            path.display()
        );
    }
    fs::write(path, bytes).map_err(|source| AudioError::IoFailure {
        path: path.display().to_string(),
        source,
    })?;
    Ok(clipped)
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

/// Parses an in-memory WAV image.
pub fn decode_wav(bytes: &[u8]) -> Result<(AudioClip, WavSpec), AudioError> {
    if bytes.len() < 12 {
        return Err(AudioError::MalformedRiff("file shorter than RIFF header".into()));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(AudioError::MalformedRiff("missing RIFF magic".into()));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(AudioError::MalformedRiff("missing WAVE form type".into()));
    }

    let mut spec: Option<WavSpec> = None;
    let mut block_align = 0usize;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        let available = bytes.len() - body;

        if id == b"data" {
            let spec = spec.ok_or_else(|| {
                AudioError::MalformedRiff("data chunk precedes fmt chunk".into())
            })?;
            if available < size {
                return Err(AudioError::TruncatedData {
                    declared: size,
                    found: available,
                });
            }
            if !size.is_multiple_of(block_align) {
                return Err(AudioError::MalformedRiff(format!(
                    "data size {size} is not a multiple of block align {block_align}"
                )));
            }
            let samples = decode_pcm16(&bytes[body..body + size], spec.channels);
            let clip = AudioClip::new(samples, spec.sample_rate_hz)?;
            return Ok((clip, spec));
        }

        if available < size {
            return Err(AudioError::MalformedRiff(format!(
                "chunk {:?} declares {size} bytes but only {available} remain",
                String::from_utf8_lossy(id)
            )));
        }
        if id == b"fmt " {
            let (parsed, align) = parse_fmt(&bytes[body..body + size])?;
            spec = Some(parsed);
            block_align = align;
        }
        // Chunks are word aligned.
        pos = body + size + (size & 1);
    }
    Err(AudioError::MalformedRiff(if spec.is_some() {
        "no data chunk".into()
    } else {
        "no fmt chunk".into()
    }))
}

fn parse_fmt(chunk: &[u8]) -> Result<(WavSpec, usize), AudioError> {
    if chunk.len() < 16 {
        return Err(AudioError::MalformedRiff(format!(
            "fmt chunk is {} bytes, need at least 16",
            chunk.len()
        )));
    }
    let format_tag = u16_at(chunk, 0);
    let channels = u16_at(chunk, 2);
    let sample_rate_hz = u32_at(chunk, 4);
    let block_align = u16_at(chunk, 12);
    let bits_per_sample = u16_at(chunk, 14);

    if format_tag != PCM_FORMAT_TAG {
        return Err(AudioError::UnsupportedFormat(format!(
            "format tag {format_tag:#06x}, only PCM (0x0001) is accepted"
        )));
    }
    if bits_per_sample != BITS_PER_SAMPLE {
        return Err(AudioError::UnsupportedFormat(format!(
            "{bits_per_sample}-bit samples, only 16-bit is accepted"
        )));
    }
    if !(1..=2).contains(&channels) {
        return Err(AudioError::UnsupportedFormat(format!("{channels} channels")));
    }
    if sample_rate_hz == 0 {
        return Err(AudioError::MalformedRiff("sample rate of 0 Hz".into()));
    }
    let expected_align = usize::from(channels) * 2;
    if usize::from(block_align) != expected_align {
        return Err(AudioError::MalformedRiff(format!(
            "block align {block_align}, expected {expected_align}"
        )));
    }
    Ok((
        WavSpec {
            channels,
            bits_per_sample,
            sample_rate_hz,
        },
        expected_align,
    ))
}

fn decode_pcm16(data: &[u8], channels: u16) -> Vec<f64> {
    let channels = usize::from(channels);
    data.chunks_exact(2 * channels)
        .map(|frame| {
            let sum: f64 = frame
                .chunks_exact(2)
                .map(|s| f64::from(i16::from_le_bytes([s[0], s[1]])) / DECODE_SCALE)
                .sum();
            sum / channels as f64
        })
        .collect()
}

/// Builds a mono 16-bit PCM WAV image. Returns the bytes and the clip count.
pub fn encode_wav(clip: &AudioClip) -> (Vec<u8>, usize) {
    let data_len = clip.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM_FORMAT_TAG.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate_hz().to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate_hz() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&BITS_PER_SAMPLE.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());

    let mut clipped = 0;
    for &s in clip.samples() {
        if !(-1.0..=1.0).contains(&s) {
            clipped += 1;
        }
        let q = (s.clamp(-1.0, 1.0) * ENCODE_SCALE).round() as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    (out, clipped)
}

/// Resamples by truncating or zero-padding the spectrum.
///
/// Output length is `round(n * target / source)`. An even-length Nyquist bin
/// is folded (downsampling) or split in half (upsampling) so the result stays
/// real.
pub fn resample(clip: &AudioClip, target_rate_hz: u32) -> Result<AudioClip, AudioError> {
    if clip.is_empty() {
        return Err(AudioError::EmptyInput);
    }
    if target_rate_hz == 0 {
        return Err(AudioError::InvalidClip("target rate must be positive".into()));
    }
    let source = clip.sample_rate_hz();
    if source == target_rate_hz {
        return Ok(clip.clone());
    }
    let n = clip.len();
    let m = ((n as f64) * f64::from(target_rate_hz) / f64::from(source)).round() as usize;
    if m == 0 {
        return Err(AudioError::EmptyInput);
    }

    let mut planner = FftPlanner::<f64>::new();
    let mut spectrum: Vec<Complex64> = clip
        .samples()
        .iter()
        .map(|&s| Complex64::new(s, 0.0))
        .collect();
    planner.plan_fft_forward(n).process(&mut spectrum);

    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let keep = n.min(m);
    // Positive bins 0..ceil(keep/2), negative bins mirrored from the end.
    let half = keep.div_ceil(2);
    out[..half].copy_from_slice(&spectrum[..half]);
    for k in 1..half {
        out[m - k] = spectrum[n - k];
    }
    if keep.is_multiple_of(2) {
        let nyq = keep / 2;
        if m < n {
            out[nyq] = spectrum[nyq] + spectrum[n - nyq];
        } else {
            let split = spectrum[nyq] * 0.5;
            out[nyq] = split;
            out[m - nyq] = split;
        }
    }

    planner.plan_fft_inverse(m).process(&mut out);
    // Unnormalized inverse contributes a factor m; rescale by 1/n overall.
    let scale = 1.0 / n as f64;
    let samples = out.iter().map(|c| c.re * scale).collect();
    AudioClip::new(samples, target_rate_hz)
}
