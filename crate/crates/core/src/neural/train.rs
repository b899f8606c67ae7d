use ndarray::{s, Array3, ArrayView2, ArrayView3};
use serde::{Deserialize, Serialize};

use super::loss::{mse_grad, mse_loss};
use super::lstm::{backward, forward_batch};
use super::model::LstmModel;
use super::optim::{clip_global_norm, optimizer_step, OptimizerKind, OptimizerState};
use super::NeuralError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    /// `None` disables clipping.
    pub grad_clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            batch_size: 32,
            epochs: 30,
            optimizer: OptimizerKind::adam(),
            grad_clip_norm: Some(5.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NeuralError::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(NeuralError::InvalidConfig("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(NeuralError::InvalidConfig("epochs must be at least 1".into()));
        }
        if let Some(c) = self.grad_clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(NeuralError::InvalidConfig(format!("clip norm must be positive, got {c}")));
            }
        }
        if let OptimizerKind::Adam { beta1, beta2, eps } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || eps.is_nan() || eps <= 0.0 {
                return Err(NeuralError::InvalidConfig("Adam needs β1, β2 in [0,1) and ε > 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    /// Gradient norm before clipping.
    pub grad_norm: f64,
    pub clipped: bool,
}

/// One optimizer update on a batch of windows (`B × T × input`) whose
/// last-step outputs are regressed onto `targets` (`B × output`).
pub fn train_step(
    model: &mut LstmModel,
    state: &mut OptimizerState,
    config: &TrainConfig,
    inputs: ArrayView3<'_, f64>,
    targets: ArrayView2<'_, f64>,
) -> Result<StepStats, NeuralError> {
    let (outputs, cache) = forward_batch(model, inputs)?;
    let last = outputs.dim().1 - 1;
    let predictions = outputs.slice(s![.., last, ..]);
    let loss = mse_loss(predictions, targets)?;
    let mut d_out = Array3::zeros(outputs.raw_dim());
    d_out.slice_mut(s![.., last, ..]).assign(&mse_grad(predictions, targets)?);
    let mut grads = backward(model, &cache, d_out.view())?;
    let grad_norm = grads.global_norm();
    if !loss.is_finite() || !grad_norm.is_finite() {
        return Err(NeuralError::NonFiniteLoss {
            step: state.steps() as usize,
            grad_norm,
        });
    }
    let clipped = match config.grad_clip_norm {
        Some(max) => clip_global_norm(&mut grads, max) > max,
        None => false,
    };
    optimizer_step(model, &grads, state, config)?;
    Ok(StepStats {
        loss,
        grad_norm,
        clipped,
    })
}
