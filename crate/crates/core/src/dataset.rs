//! Normalized, windowed training data cut from a fractional-domain signal.
//!
//! # File format
//!
//! A dataset file is `"FWD1"`, a version byte (`1`), then little-endian:
//! `window_len: u32`, `horizon: u32`, `split_index: u64`, `len: u64`,
//! real `min, max: f64`, imag `min, max: f64`, the real channel
//! (`len × f64`) and the imag channel (`len × f64`).

use std::fs;
use std::ops::Range;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::transforms::ComplexSignal;

pub const DATASET_MAGIC: &[u8; 4] = b"FWD1";
pub const DATASET_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 4 + 4 + 8 + 8 + 4 * 8;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("input is empty")]
    EmptyInput,
    #[error("channel is constant (min = max = {0}); cannot normalize")]
    ConstantChannel(f64),
    #[error("channel needs at least 2 finite values")]
    ChannelTooShort,
    #[error("interval {start}..{end} holds {len} samples, need window + horizon = {needed}")]
    IntervalTooShort {
        start: usize,
        end: usize,
        len: usize,
        needed: usize,
    },
    #[error("split at {split} of {len} leaves an interval shorter than window + horizon = {needed}")]
    ResultingIntervalTooShort { split: usize, len: usize, needed: usize },
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("not a dataset file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported dataset version {0}")]
    VersionMismatch(u8),
    #[error("dataset file is truncated or has trailing bytes")]
    Corrupt,
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Min-max constants mapping a channel onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormParams {
    min: f64,
    max: f64,
}

impl NormParams {
    pub fn new(min: f64, max: f64) -> Result<Self, DatasetError> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(DatasetError::Invalid(format!("non-finite bounds {min}, {max}")));
        }
        if max <= min {
            return Err(DatasetError::ConstantChannel(min));
        }
        Ok(Self { min, max })
    }

    /// Fits the bounds of `values`.
    pub fn fit(values: &[f64]) -> Result<Self, DatasetError> {
        if values.len() < 2 {
            return Err(DatasetError::ChannelTooShort);
        }
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Self::new(min, max)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let span = self.max - self.min;
        values.iter().map(|&x| 2.0 * (x - self.min) / span - 1.0).collect()
    }

    /// Affine inverse of [`apply`](Self::apply); values outside `[-1, 1]` extrapolate.
    pub fn invert(&self, values: &[f64]) -> Vec<f64> {
        let span = self.max - self.min;
        values.iter().map(|&y| (y + 1.0) * span / 2.0 + self.min).collect()
    }
}

pub fn normalize(channel: &[f64]) -> Result<(Vec<f64>, NormParams), DatasetError> {
    let params = NormParams::fit(channel)?;
    Ok((params.apply(channel), params))
}

pub fn denormalize(values: &[f64], params: &NormParams) -> Vec<f64> {
    params.invert(values)
}

pub fn split_complex(signal: &ComplexSignal) -> Result<(Vec<f64>, Vec<f64>), DatasetError> {
    if signal.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    Ok((signal.re(), signal.im()))
}

pub fn combine(re: &[f64], im: &[f64]) -> Result<ComplexSignal, DatasetError> {
    if re.len() != im.len() {
        return Err(DatasetError::Invalid(format!(
            "channel lengths differ: {} vs {}",
            re.len(),
            im.len()
        )));
    }
    ComplexSignal::new(re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect())
        .map_err(|e| DatasetError::Invalid(e.to_string()))
}

/// Supervised pairs: each target row is the `horizon` values right after its input row.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBatch {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
}

impl WindowBatch {
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }
}

/// Start offsets of every window inside `range` at the given stride.
pub fn window_starts(
    range: Range<usize>,
    window_len: usize,
    horizon: usize,
    stride: usize,
) -> Result<Vec<usize>, DatasetError> {
    let needed = window_len + horizon;
    let len = range.end.saturating_sub(range.start);
    if len < needed || window_len == 0 || horizon == 0 {
        return Err(DatasetError::IntervalTooShort {
            start: range.start,
            end: range.end,
            len,
            needed,
        });
    }
    let stride = stride.max(1);
    Ok((range.start..=range.end - needed).step_by(stride).collect())
}

/// Stride-1 windows over `range`.
pub fn make_windows(
    channel: &[f64],
    window_len: usize,
    horizon: usize,
    range: Range<usize>,
) -> Result<WindowBatch, DatasetError> {
    make_windows_strided(channel, window_len, horizon, range, 1)
}

pub fn make_windows_strided(
    channel: &[f64],
    window_len: usize,
    horizon: usize,
    range: Range<usize>,
    stride: usize,
) -> Result<WindowBatch, DatasetError> {
    if range.end > channel.len() {
        return Err(DatasetError::Invalid(format!(
            "interval end {} beyond channel length {}",
            range.end,
            channel.len()
        )));
    }
    let starts = window_starts(range, window_len, horizon, stride)?;
    Ok(gather_windows(channel, &starts, window_len, horizon))
}

pub(crate) fn gather_windows(channel: &[f64], starts: &[usize], window_len: usize, horizon: usize) -> WindowBatch {
    let inputs = Array2::from_shape_fn((starts.len(), window_len), |(i, j)| channel[starts[i] + j]);
    let targets = Array2::from_shape_fn((starts.len(), horizon), |(i, j)| channel[starts[i] + window_len + j]);
    WindowBatch { inputs, targets }
}

/// `(train, test)` intervals for a channel of `len` samples split at `floor(len·fraction)`.
pub fn split_intervals(
    len: usize,
    train_fraction: f64,
    window_len: usize,
    horizon: usize,
) -> Result<(Range<usize>, Range<usize>), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(train_fraction));
    }
    let split = (len as f64 * train_fraction).floor() as usize;
    let needed = window_len + horizon;
    if split < needed || len - split < needed {
        return Err(DatasetError::ResultingIntervalTooShort { split, len, needed });
    }
    Ok((0..split, split..len))
}

pub fn train_test_split(
    dataset: &FeatureDataset,
    train_fraction: f64,
) -> Result<(Range<usize>, Range<usize>), DatasetError> {
    split_intervals(dataset.len(), train_fraction, dataset.window_len, dataset.horizon)
}

/// Normalized real and imaginary streams with the constants to undo the scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    pub real_channel: Vec<f64>,
    pub imag_channel: Vec<f64>,
    pub real_norm: NormParams,
    pub imag_norm: NormParams,
    pub window_len: usize,
    pub horizon: usize,
    pub split_index: usize,
}

impl FeatureDataset {
    pub fn new(
        real_channel: Vec<f64>,
        imag_channel: Vec<f64>,
        real_norm: NormParams,
        imag_norm: NormParams,
        window_len: usize,
        horizon: usize,
        split_index: usize,
    ) -> Result<Self, DatasetError> {
        let ds = Self {
            real_channel,
            imag_channel,
            real_norm,
            imag_norm,
            window_len,
            horizon,
            split_index,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let len = self.real_channel.len();
        if self.imag_channel.len() != len {
            return Err(DatasetError::Invalid("channel lengths differ".into()));
        }
        if self.window_len == 0 || self.horizon == 0 {
            return Err(DatasetError::Invalid("window and horizon must be positive".into()));
        }
        if self.split_index == 0 || self.split_index >= len {
            return Err(DatasetError::Invalid(format!(
                "split index {} outside 1..{len}",
                self.split_index
            )));
        }
        let finite = |c: &[f64]| c.iter().all(|v| v.is_finite());
        if !finite(&self.real_channel) || !finite(&self.imag_channel) {
            return Err(DatasetError::Invalid("non-finite channel value".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.real_channel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real_channel.is_empty()
    }

    pub fn train_interval(&self) -> Range<usize> {
        0..self.split_index
    }

    pub fn test_interval(&self) -> Range<usize> {
        self.split_index..self.len()
    }

    /// Denormalized channels recombined into the fractional-domain signal.
    pub fn to_complex(&self) -> Result<ComplexSignal, DatasetError> {
        combine(
            &self.real_norm.invert(&self.real_channel),
            &self.imag_norm.invert(&self.imag_channel),
        )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * self.len());
        out.extend_from_slice(DATASET_MAGIC);
        out.push(DATASET_VERSION);
        out.extend_from_slice(&(self.window_len as u32).to_le_bytes());
        out.extend_from_slice(&(self.horizon as u32).to_le_bytes());
        out.extend_from_slice(&(self.split_index as u64).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for v in [self.real_norm.min, self.real_norm.max, self.imag_norm.min, self.imag_norm.max] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in self.real_channel.iter().chain(&self.imag_channel) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DatasetError> {
        if bytes.len() < 5 || &bytes[..4] != DATASET_MAGIC {
            return Err(DatasetError::BadMagic);
        }
        if bytes[4] != DATASET_VERSION {
            return Err(DatasetError::VersionMismatch(bytes[4]));
        }
        if bytes.len() < HEADER_LEN {
            return Err(DatasetError::Corrupt);
        }
        let mut r = Reader { bytes, pos: 5 };
        let window_len = r.u32() as usize;
        let horizon = r.u32() as usize;
        let split_index = r.u64() as usize;
        let len = r.u64() as usize;
        let bounds = [r.f64(), r.f64(), r.f64(), r.f64()];
        let expected = len
            .checked_mul(16)
            .and_then(|b| b.checked_add(HEADER_LEN))
            .ok_or(DatasetError::Corrupt)?;
        if bytes.len() != expected {
            return Err(DatasetError::Corrupt);
        }
        let real_channel = (0..len).map(|_| r.f64()).collect();
        let imag_channel = (0..len).map(|_| r.f64()).collect();
        Self::new(
            real_channel,
            imag_channel,
            NormParams::new(bounds[0], bounds[1])?,
            NormParams::new(bounds[2], bounds[3])?,
            window_len,
            horizon,
            split_index,
        )
    }
}

pub(crate) struct Reader<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.bytes[self.pos..self.pos + N].try_into().expect("length checked");
        self.pos += N;
        out
    }

    pub fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    pub fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    pub fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn save_dataset(dataset: &FeatureDataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    fs::write(path, dataset.to_bytes()).map_err(|source| DatasetError::IoFailure {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<FeatureDataset, DatasetError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| DatasetError::IoFailure {
        path: path.display().to_string(),
        source,
    })?;
    FeatureDataset::from_bytes(&bytes)
}
