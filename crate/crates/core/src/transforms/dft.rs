use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unitary DFT on the centered grid (`fftshift ∘ fft ∘ ifftshift / √N`).
#[derive(Clone)]
pub struct CenteredDft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for CenteredDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CenteredDft").field("len", &self.len).finish()
    }
}

impl CenteredDft {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            scale: 1.0 / (len as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(&self.forward, buf);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(&self.inverse, buf);
    }

    fn run(&self, fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        let half = self.len / 2;
        buf.rotate_left(half);
        fft.process(buf);
        buf.rotate_right(half);
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
    }
}

pub fn centered_dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    CenteredDft::new(x.len()).forward(&mut buf);
    buf
}

pub fn centered_idft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    CenteredDft::new(x.len()).inverse(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn direct(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        let h = (n / 2) as f64;
        (0..n)
            .map(|k| {
                let kc = k as f64 - h;
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let nc = j as f64 - h;
                        v * Complex64::from_polar(1.0, sign * 2.0 * PI * kc * nc / n as f64)
                    })
                    .sum::<Complex64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum_even_and_odd() {
        for n in [1usize, 2, 7, 16, 33] {
            let x: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
                .collect();
            let fast = centered_dft(&x);
            let slow = direct(&x, -1.0);
            let back = centered_idft(&x);
            let back_slow = direct(&x, 1.0);
            for i in 0..n {
                assert!((fast[i] - slow[i]).norm() < 1e-12);
                assert!((back[i] - back_slow[i]).norm() < 1e-12);
            }
        }
    }
}
