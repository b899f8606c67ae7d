//! Fractional Fourier series synthesis
//! `f(t) = Σ_n c_n · exp(-iπ·n·a) · exp(2πi·n·t/T)`,
//! cross-checked between two independent codings. Verification utility only.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::TransformError;

const MAX_COEFFS: usize = 64;

/// Synthesizes the series on a uniform grid over one period twice and
/// returns the largest absolute disagreement.
///
/// `coeffs[j]` is the coefficient of harmonic `n = j - len/2`. The first
/// coding folds both phase factors into one complex ratio and evaluates the
/// polynomial by Horner's rule; the second sums term by term with each
/// phase factor computed separately.
pub fn fractional_series_check(coeffs: &[Complex64], order: f64, period: f64) -> Result<f64, TransformError> {
    if coeffs.len() > MAX_COEFFS {
        return Err(TransformError::TooManyCoefficients {
            len: coeffs.len(),
            max: MAX_COEFFS,
        });
    }
    if coeffs.is_empty() {
        return Ok(0.0);
    }
    let lowest = -((coeffs.len() / 2) as f64);
    let points = (4 * coeffs.len()).max(64);
    let mut residual: f64 = 0.0;
    for p in 0..points {
        let t = period * p as f64 / points as f64;
        let theta = 2.0 * PI * t / period - PI * order;
        let z = Complex64::from_polar(1.0, theta);
        let horner = coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
            * Complex64::from_polar(1.0, lowest * theta);

        let direct: Complex64 = coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let n = lowest + j as f64;
                let fractional = Complex64::new((PI * n * order).cos(), -(PI * n * order).sin());
                let harmonic = Complex64::new((2.0 * PI * n * t / period).cos(), (2.0 * PI * n * t / period).sin());
                c * fractional * harmonic
            })
            .sum();
        residual = residual.max((horner - direct).norm());
    }
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_dc_coefficient() {
        let r = fractional_series_check(&[Complex64::new(1.0, 0.0)], 0.37, 2.0).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn ordinary_series_at_order_zero() {
        let coeffs: Vec<Complex64> = (0..9).map(|i| Complex64::new(1.0 / (1 + i) as f64, 0.0)).collect();
        assert!(fractional_series_check(&coeffs, 0.0, 1.0).unwrap() <= 1e-12);
    }

    #[test]
    fn random_coefficients_half_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs: Vec<Complex64> = (0..8)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        assert!(fractional_series_check(&coeffs, 0.5, 3.0).unwrap() <= 1e-12);
    }

    #[test]
    fn coefficient_cap() {
        assert!(fractional_series_check(&vec![Complex64::new(0.0, 0.0); 65], 0.1, 1.0).is_err());
    }
}
