use ndarray::{s, Array3, ArrayView2, ArrayView3};

use super::loss::mse_grad;
use super::lstm::{backward, forward_batch, predict_last};
use super::model::LstmModel;
use super::NeuralError;

const STEP: f64 = 1e-5;
const MAX_PARAMS: usize = 2000;

/// `|a - n| / max(|a| + |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares backpropagated gradients of the last-step MSE against central
/// differences on every parameter and returns the worst relative error.
pub fn grad_check(
    model: &LstmModel,
    inputs: ArrayView3<'_, f64>,
    targets: ArrayView2<'_, f64>,
) -> Result<f64, NeuralError> {
    let count = model.param_count();
    if count > MAX_PARAMS {
        return Err(NeuralError::DimensionMismatch(format!(
            "gradient check is limited to {MAX_PARAMS} parameters, model has {count}"
        )));
    }
    let (outputs, cache) = forward_batch(model, inputs)?;
    let last = outputs.dim().1 - 1;
    let mut d_out = Array3::zeros(outputs.raw_dim());
    d_out
        .slice_mut(s![.., last, ..])
        .assign(&mse_grad(outputs.slice(s![.., last, ..]), targets)?);
    let analytic = backward(model, &cache, d_out.view())?;

    // Differencing predictions before squaring keeps the cancellation error
    // at the level of the outputs rather than the loss.
    let n = targets.len() as f64;
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (block, grads) in analytic.param_slices().iter().enumerate() {
        for (i, &g) in grads.iter().enumerate() {
            let original = probe.param_slices()[block][i];
            probe.param_slices_mut()[block][i] = original + STEP;
            let up = predict_last(&probe, inputs)?;
            probe.param_slices_mut()[block][i] = original - STEP;
            let down = predict_last(&probe, inputs)?;
            probe.param_slices_mut()[block][i] = original;
            let delta: f64 = up
                .iter()
                .zip(down.iter())
                .zip(targets.iter())
                .map(|((u, d), t)| (u - d) * (u + d - 2.0 * t))
                .sum::<f64>()
                / n;
            let numeric = delta / (2.0 * STEP);
            worst = worst.max(relative_error(g, numeric));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::model::{init_model, ModelShape};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> ModelShape {
        ModelShape {
            input_size: 1,
            hidden_size: 4,
            output_size: 1,
            num_layers: 2,
        }
    }

    fn batch(seed: u64, b: usize, t: usize) -> (Array3<f64>, Array2<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array3::from_shape_simple_fn((b, t, 1), || rng.random_range(-1.0..1.0));
        let y = Array2::from_shape_simple_fn((b, 1), || rng.random_range(-1.0..1.0));
        (x, y)
    }

    #[test]
    fn backprop_matches_finite_differences() {
        for seed in 0..5 {
            let model = init_model(small(), seed);
            let (x, y) = batch(100 + seed, 3, 8);
            let err = grad_check(&model, x.view(), y.view()).unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn zero_model_and_zero_inputs() {
        let model = LstmModel::zeros(small());
        let x = Array3::zeros((2, 5, 1));
        let y = Array2::from_elem((2, 1), 0.5);
        assert_eq!(grad_check(&model, x.view(), y.view()).unwrap(), 0.0);
    }

    #[test]
    fn repeatable() {
        let model = init_model(small(), 9);
        let (x, y) = batch(9, 2, 8);
        let a = grad_check(&model, x.view(), y.view()).unwrap();
        let b = grad_check(&model, x.view(), y.view()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn refuses_large_models() {
        let model = init_model(
            ModelShape {
                input_size: 1,
                hidden_size: 32,
                output_size: 1,
                num_layers: 1,
            },
            0,
        );
        let (x, y) = batch(0, 1, 2);
        assert!(grad_check(&model, x.view(), y.view()).is_err());
    }
}
