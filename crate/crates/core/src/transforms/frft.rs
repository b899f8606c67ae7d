use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::dft::CenteredDft;
use super::{centered, check_order, parity, Kernel, TransformError};

/// Precomputed fractional Fourier transform for one length and order.
///
/// For [`Kernel::StandardChirp`] the order is first reduced with the exact
/// special cases `F^0 = I`, `F^1 = DFT`, `F^-1 = IDFT`, `F^±2 = parity`, and
/// `F^a = F^(a∓1) ∘ F^(±1)`, so the chirp stage only ever runs at an
/// effective order with `0.5 <= |a| <= 1.5` where `|sin φ|` is well away
/// from zero.
///
/// The chirp stage at angle `φ` is
///
/// ```text
/// y = D ⊙ IDFT( G ⊙ DFT( D ⊙ x ) )
/// D[n] = exp(-iπ·tan(φ/2)·n²/N)
/// G[k] = exp(iφ/2) · exp(-iπ·sin(φ)·k²/N)
/// ```
///
/// on the centered grid with unit spacing `1/√N`. The middle factor is the
/// chirp convolution `exp(iπ·csc(φ)·x²)` carried out in the frequency
/// domain, where its spectrum is the unimodular chirp `G`. Each factor is
/// unitary, so the stage is exactly unitary and the stage at `-φ` is its
/// exact inverse. At `φ = π/2` and even `N` the stage reproduces the
/// centered DFT to rounding.
#[derive(Debug, Clone)]
pub struct FrftPlan {
    len: usize,
    order: f64,
    kernel: Kernel,
    dft: CenteredDft,
    steps: Vec<Step>,
}

#[derive(Debug, Clone)]
enum Step {
    Dft,
    InverseDft,
    Parity,
    Chirp(ChirpStage),
    /// Per-bin phase of the literal kernel, applied after a DFT.
    SignPhase(Vec<Complex64>),
}

#[derive(Debug, Clone)]
struct ChirpStage {
    order: f64,
    outer: Vec<Complex64>,
    spectral: Vec<Complex64>,
}

impl ChirpStage {
    fn new(len: usize, order: f64) -> Self {
        let phi = order * FRAC_PI_2;
        let n = len as f64;
        let shear = (phi / 2.0).tan();
        let spread = phi.sin();
        let global = Complex64::from_polar(1.0, phi / 2.0);
        let outer = (0..len)
            .map(|j| {
                let x = centered(j, len);
                Complex64::from_polar(1.0, -PI * shear * x * x / n)
            })
            .collect();
        let spectral = (0..len)
            .map(|j| {
                let k = centered(j, len);
                global * Complex64::from_polar(1.0, -PI * spread * k * k / n)
            })
            .collect();
        Self {
            order,
            outer,
            spectral,
        }
    }

    fn apply(&self, dft: &CenteredDft, buf: &mut [Complex64], conjugate: bool) {
        let pick = |c: Complex64| if conjugate { c.conj() } else { c };
        for (v, d) in buf.iter_mut().zip(&self.outer) {
            *v *= pick(*d);
        }
        dft.forward(buf);
        for (v, g) in buf.iter_mut().zip(&self.spectral) {
            *v *= pick(*g);
        }
        dft.inverse(buf);
        for (v, d) in buf.iter_mut().zip(&self.outer) {
            *v *= pick(*d);
        }
    }
}

impl FrftPlan {
    pub fn new(len: usize, order: f64, kernel: Kernel) -> Result<Self, TransformError> {
        if len < 2 {
            return Err(TransformError::LengthTooSmall(len));
        }
        check_order(order)?;
        let steps = match kernel {
            Kernel::StandardChirp => chirp_steps(len, order),
            Kernel::PaperLiteral => literal_steps(len, order),
        };
        Ok(Self {
            len,
            order,
            kernel,
            dft: CenteredDft::new(len),
            steps,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Order the chirp stage runs at after reduction, if one is needed.
    pub fn effective_order(&self) -> Option<f64> {
        self.steps.iter().find_map(|s| match s {
            Step::Chirp(c) => Some(c.order),
            _ => None,
        })
    }

    pub fn forward(&self, signal: &[Complex64]) -> Result<Vec<Complex64>, TransformError> {
        self.check_len(signal)?;
        let mut buf = signal.to_vec();
        for step in &self.steps {
            buf = self.apply_step(step, buf, false);
        }
        Ok(buf)
    }

    /// Undoes [`forward`](Self::forward) by running the inverse of every step
    /// in reverse order.
    pub fn inverse(&self, signal: &[Complex64]) -> Result<Vec<Complex64>, TransformError> {
        self.check_len(signal)?;
        let mut buf = signal.to_vec();
        for step in self.steps.iter().rev() {
            buf = self.apply_step(step, buf, true);
        }
        Ok(buf)
    }

    fn check_len(&self, signal: &[Complex64]) -> Result<(), TransformError> {
        if signal.len() != self.len {
            return Err(TransformError::PlanLengthMismatch {
                plan: self.len,
                signal: signal.len(),
            });
        }
        Ok(())
    }

    fn apply_step(&self, step: &Step, mut buf: Vec<Complex64>, invert: bool) -> Vec<Complex64> {
        match (step, invert) {
            (Step::Dft, false) | (Step::InverseDft, true) => self.dft.forward(&mut buf),
            (Step::Dft, true) | (Step::InverseDft, false) => self.dft.inverse(&mut buf),
            (Step::Parity, _) => buf = parity(&buf),
            (Step::Chirp(stage), conj) => stage.apply(&self.dft, &mut buf, conj),
            (Step::SignPhase(phase), conj) => {
                for (v, p) in buf.iter_mut().zip(phase) {
                    *v *= if conj { p.conj() } else { *p };
                }
            }
        }
        buf
    }
}

fn chirp_steps(len: usize, a: f64) -> Vec<Step> {
    let chirp = |b: f64| Step::Chirp(ChirpStage::new(len, b));
    if a == 0.0 {
        vec![]
    } else if a == 1.0 {
        vec![Step::Dft]
    } else if a == -1.0 {
        vec![Step::InverseDft]
    } else if a == -2.0 {
        vec![Step::Parity]
    } else if (0.5..=1.5).contains(&a.abs()) {
        vec![chirp(a)]
    } else if a > 0.0 {
        // (0, 0.5) or (1.5, 2)
        vec![Step::Dft, chirp(a - 1.0)]
    } else {
        vec![Step::InverseDft, chirp(a + 1.0)]
    }
}

fn literal_steps(len: usize, a: f64) -> Vec<Step> {
    if a == 0.0 {
        return vec![];
    }
    let phase = (0..len)
        .map(|j| {
            let sgn = centered(j, len).signum_or_zero();
            Complex64::from_polar(1.0, -FRAC_PI_2 * sgn * a)
        })
        .collect();
    vec![Step::Dft, Step::SignPhase(phase)]
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self == 0.0 {
            0.0
        } else {
            self.signum()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::centered_dft;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn energy(x: &[Complex64]) -> f64 {
        x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn order_zero_is_identity_for_both_kernels() {
        let x = random_signal(50, 1);
        for kernel in [Kernel::StandardChirp, Kernel::PaperLiteral] {
            let plan = FrftPlan::new(50, 0.0, kernel).unwrap();
            assert_eq!(plan.forward(&x).unwrap(), x);
            assert_eq!(plan.inverse(&x).unwrap(), x);
        }
    }

    #[test]
    fn impulse_order_one_is_flat() {
        let mut x = vec![Complex64::new(0.0, 0.0); 64];
        x[0] = Complex64::new(1.0, 0.0);
        let y = FrftPlan::new(64, 1.0, Kernel::StandardChirp).unwrap().forward(&x).unwrap();
        for v in y {
            assert!((v.norm() - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn chirp_stage_at_quarter_turn_is_dft_for_even_lengths() {
        for n in [16, 64, 200] {
            let x = random_signal(n, n as u64);
            let stage = ChirpStage::new(n, 1.0);
            let mut y = x.clone();
            stage.apply(&CenteredDft::new(n), &mut y, false);
            assert!(max_diff(&y, &centered_dft(&x)) < 1e-11);
        }
    }

    #[test]
    fn reduction_keeps_chirp_well_conditioned() {
        for a in [0.05, 0.3, 0.49, 0.5, 0.9, 1.5, 1.7, 1.99, -0.05, -0.7, -1.6, -1.99] {
            let plan = FrftPlan::new(32, a, Kernel::StandardChirp).unwrap();
            let eff = plan.effective_order().unwrap();
            assert!((0.5..=1.5).contains(&eff.abs()), "{a} -> {eff}");
        }
        for a in [0.0, 1.0, -1.0, -2.0] {
            assert!(FrftPlan::new(32, a, Kernel::StandardChirp).unwrap().effective_order().is_none());
        }
    }

    #[test]
    fn unitary_and_invertible() {
        for n in [64usize, 200, 257] {
            let x = random_signal(n, 7);
            for a in [0.05, 0.3, 0.5, 1.0, 1.3, 1.8, -0.4, -1.7, -2.0] {
                for kernel in [Kernel::StandardChirp, Kernel::PaperLiteral] {
                    let plan = FrftPlan::new(n, a, kernel).unwrap();
                    let y = plan.forward(&x).unwrap();
                    assert!((energy(&y) / energy(&x) - 1.0).abs() < 1e-10);
                    assert!(max_diff(&plan.inverse(&y).unwrap(), &x) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn inverse_equals_negated_order_inside_chirp_band() {
        let x = random_signal(128, 3);
        for a in [0.6, 1.2, -0.8] {
            let inv = FrftPlan::new(128, a, Kernel::StandardChirp).unwrap().inverse(&x).unwrap();
            let neg = FrftPlan::new(128, -a, Kernel::StandardChirp).unwrap().forward(&x).unwrap();
            assert!(max_diff(&inv, &neg) < 1e-12);
        }
    }

    #[test]
    fn gaussian_is_an_eigenfunction() {
        let n = 256;
        let x: Vec<Complex64> = (0..n)
            .map(|j| {
                let t = centered(j, n);
                Complex64::new((-PI * t * t / n as f64).exp(), 0.0)
            })
            .collect();
        for a in [0.05, 0.5, 0.7, 1.3] {
            let y = FrftPlan::new(n, a, Kernel::StandardChirp).unwrap().forward(&x).unwrap();
            assert!(max_diff(&y, &x) < 1e-9, "order {a}");
        }
    }

    #[test]
    fn literal_kernel_phase_is_odd_in_frequency() {
        let n = 8;
        let x = random_signal(n, 11);
        let a = 0.4;
        let y = FrftPlan::new(n, a, Kernel::PaperLiteral).unwrap().forward(&x).unwrap();
        let spectrum = centered_dft(&x);
        for j in 0..n {
            let k = centered(j, n);
            let expected = spectrum[j] * Complex64::from_polar(1.0, -FRAC_PI_2 * k.signum_or_zero() * a);
            assert!((y[j] - expected).norm() < 1e-14);
        }
        // DC bin untouched
        assert!((y[n / 2] - spectrum[n / 2]).norm() < 1e-15);
    }

    #[test]
    fn errors() {
        assert_eq!(
            FrftPlan::new(1, 0.5, Kernel::StandardChirp).unwrap_err(),
            TransformError::LengthTooSmall(1)
        );
        assert_eq!(
            FrftPlan::new(8, 2.0, Kernel::StandardChirp).unwrap_err(),
            TransformError::OrderOutOfRange(2.0)
        );
        assert!(FrftPlan::new(8, f64::NAN, Kernel::PaperLiteral).is_err());
        let plan = FrftPlan::new(8, 0.5, Kernel::StandardChirp).unwrap();
        assert!(plan.forward(&random_signal(9, 0)).is_err());
    }
}
