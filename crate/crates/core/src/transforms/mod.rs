//! Fractional Fourier analysis/synthesis and STFT feature maps.
//!
//! Two kernels are available. [`Kernel::PaperLiteral`] is a phase-ramped
//! ordinary Fourier transform: a unitary centered DFT followed by a per-bin
//! phase `exp(-i·(π/2)·sgn(ω)·a)`. [`Kernel::StandardChirp`] is the rotation
//! of the time-frequency plane by `φ = a·π/2`, computed with the
//! multiply/convolve/multiply chirp decomposition (see [`FrftPlan`]).
//!
//! All transforms index samples on a centered grid: array slot `j` holds
//! coordinate `j - N/2` (integer division), the same convention as
//! `fftshift`.

mod dft;
mod frft;
mod naive;
mod series;
mod stft;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dft::{centered_dft, centered_idft, CenteredDft};
pub use frft::FrftPlan;
pub use naive::{frft_naive, NAIVE_MAX_LEN};
pub use series::fractional_series_check;
pub use stft::{stft, Spectrogram};

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("signal length {0} is below the minimum of 2")]
    LengthTooSmall(usize),
    #[error("signal length {len} exceeds the direct-evaluation limit of {max}")]
    LengthTooLarge { len: usize, max: usize },
    #[error("fractional order {0} is outside [-2, 2)")]
    OrderOutOfRange(f64),
    #[error("plan built for length {plan} applied to length {signal}")]
    PlanLengthMismatch { plan: usize, signal: usize },
    #[error("signal too short: {len} samples, need at least {needed}")]
    SignalTooShort { len: usize, needed: usize },
    #[error("invalid STFT parameters: {0}")]
    InvalidStft(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("at most {max} coefficients are supported, got {len}")]
    TooManyCoefficients { len: usize, max: usize },
}

/// Which discrete fractional Fourier kernel to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[serde(rename = "paper")]
    PaperLiteral,
    #[default]
    #[serde(rename = "standard")]
    StandardChirp,
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::PaperLiteral => "paper",
            Kernel::StandardChirp => "standard",
        })
    }
}

impl FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Kernel::PaperLiteral),
            "standard" => Ok(Kernel::StandardChirp),
            other => Err(format!("unknown kernel {other:?} (expected paper|standard)")),
        }
    }
}

/// Complex-valued sequence with finite components.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal(Vec<Complex64>);

impl ComplexSignal {
    pub fn new(values: Vec<Complex64>) -> Result<Self, TransformError> {
        match values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            Some(i) => Err(TransformError::NonFinite(i)),
            None => Ok(Self(values)),
        }
    }

    pub fn from_real(values: &[f64]) -> Result<Self, TransformError> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_parts(re: &[f64], im: &[f64]) -> Result<Self, TransformError> {
        assert_eq!(re.len(), im.len(), "real and imaginary parts differ in length");
        Self::new(re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect())
    }

    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn re(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.im).collect()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Forward fractional Fourier transform of order `order` in `[-2, 2)`.
pub fn frft(signal: &ComplexSignal, order: f64, kernel: Kernel) -> Result<ComplexSignal, TransformError> {
    let plan = FrftPlan::new(signal.len(), order, kernel)?;
    Ok(ComplexSignal(plan.forward(signal.values())?))
}

/// Exact inverse of [`frft`] at the same order and kernel.
pub fn ifrft(signal: &ComplexSignal, order: f64, kernel: Kernel) -> Result<ComplexSignal, TransformError> {
    let plan = FrftPlan::new(signal.len(), order, kernel)?;
    Ok(ComplexSignal(plan.inverse(signal.values())?))
}

pub(crate) fn check_order(order: f64) -> Result<(), TransformError> {
    if order.is_finite() && (-2.0..2.0).contains(&order) {
        Ok(())
    } else {
        Err(TransformError::OrderOutOfRange(order))
    }
}

/// Centered coordinate of array slot `j` for length `n`.
pub(crate) fn centered(j: usize, n: usize) -> f64 {
    j as f64 - (n / 2) as f64
}

/// Reflection about the centered origin: `y[j] = x[(2·(N/2) - j) mod N]`.
pub(crate) fn parity(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let c = 2 * (n / 2);
    (0..n).map(|j| x[(c + n - j) % n]).collect()
}
