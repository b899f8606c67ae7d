//! Direct O(N²) evaluation of the chirp-kernel transform, used as a
//! brute-force oracle for [`FrftPlan`](super::FrftPlan).
//!
//! Nothing here touches an FFT. The chirp-stage kernel is written out entry
//! by entry as
//!
//! ```text
//! K[m, n] = exp(iπ·(cot φ·(m² + n²) - 2·csc φ·m·n) / N) · w(m - n)
//! w(d)    = exp(-iπ·csc φ·d²/N) · (e^{iφ/2}/N) · Σ_k exp(-iπ·sin φ·k²/N + 2πi·k·d/N)
//! ```
//!
//! where the lag window `w` is the band-limited form of the constant
//! `sqrt(1 - i·cot φ)/√N` that appears in the sampled continuous kernel.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::{centered, check_order, parity, ComplexSignal, TransformError};

pub const NAIVE_MAX_LEN: usize = 512;

pub fn frft_naive(signal: &ComplexSignal, order: f64) -> Result<ComplexSignal, TransformError> {
    let n = signal.len();
    if n > NAIVE_MAX_LEN {
        return Err(TransformError::LengthTooLarge {
            len: n,
            max: NAIVE_MAX_LEN,
        });
    }
    if n < 2 {
        return Err(TransformError::LengthTooSmall(n));
    }
    check_order(order)?;
    let x = signal.values();
    let out = if order == 0.0 {
        x.to_vec()
    } else if order == 1.0 {
        dft_matrix_apply(x, -1.0)
    } else if order == -1.0 {
        dft_matrix_apply(x, 1.0)
    } else if order == -2.0 {
        parity(x)
    } else if (0.5..=1.5).contains(&order.abs()) {
        kernel_apply(x, order)
    } else if order > 0.0 {
        kernel_apply(&dft_matrix_apply(x, -1.0), order - 1.0)
    } else {
        kernel_apply(&dft_matrix_apply(x, 1.0), order + 1.0)
    };
    ComplexSignal::new(out)
}

fn dft_matrix_apply(x: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = x.len();
    let nf = n as f64;
    (0..n)
        .map(|r| {
            let k = centered(r, n);
            x.iter()
                .enumerate()
                .map(|(c, v)| v * Complex64::from_polar(1.0, sign * 2.0 * PI * k * centered(c, n) / nf))
                .sum::<Complex64>()
                / nf.sqrt()
        })
        .collect()
}

/// The full N×N kernel matrix at a chirp-band order.
pub(crate) fn kernel_matrix(n: usize, order: f64) -> Vec<Vec<Complex64>> {
    let phi = order * FRAC_PI_2;
    let nf = n as f64;
    let cot = phi.cos() / phi.sin();
    let csc = 1.0 / phi.sin();
    let lag_window: Vec<Complex64> = (0..2 * n - 1)
        .map(|i| {
            let d = i as f64 - (n - 1) as f64;
            let sum: Complex64 = (0..n)
                .map(|j| {
                    let k = centered(j, n);
                    Complex64::from_polar(1.0, -PI * phi.sin() * k * k / nf + 2.0 * PI * k * d / nf)
                })
                .sum();
            Complex64::from_polar(1.0, -PI * csc * d * d / nf + phi / 2.0) * sum / nf
        })
        .collect();
    (0..n)
        .map(|r| {
            let m = centered(r, n);
            (0..n)
                .map(|c| {
                    let u = centered(c, n);
                    let chirp = PI * (cot * (m * m + u * u) - 2.0 * csc * m * u) / nf;
                    Complex64::from_polar(1.0, chirp) * lag_window[r + n - 1 - c]
                })
                .collect()
        })
        .collect()
}

fn kernel_apply(x: &[Complex64], order: f64) -> Vec<Complex64> {
    kernel_matrix(x.len(), order)
        .iter()
        .map(|row| row.iter().zip(x).map(|(k, v)| k * v).sum())
        .collect()
}
