use serde::{Deserialize, Serialize};

use super::model::{Gradients, LstmModel};
use super::train::TrainConfig;
use super::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerKind {
    Adam { beta1: f64, beta2: f64, eps: f64 },
    Sgd,
}

impl OptimizerKind {
    pub const fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Default for OptimizerKind {
    fn default() -> Self {
        Self::adam()
    }
}

/// Step counter and Adam moments. Moments are allocated on the first Adam step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizerState {
    step: u64,
    moments: Option<(LstmModel, LstmModel)>,
}

impl OptimizerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> u64 {
        self.step
    }
}

/// Rescales `grads` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm && norm.is_finite() {
        grads.scale(max_norm / norm);
    }
    norm
}

pub fn optimizer_step(
    params: &mut LstmModel,
    grads: &Gradients,
    state: &mut OptimizerState,
    config: &TrainConfig,
) -> Result<(), NeuralError> {
    if params.shape() != grads.shape() {
        return Err(NeuralError::ShapeMismatch(format!(
            "parameters {:?} vs gradients {:?}",
            params.shape(),
            grads.shape()
        )));
    }
    let lr = config.learning_rate;
    state.step += 1;
    match config.optimizer {
        OptimizerKind::Sgd => {
            for (p, g) in params.param_slices_mut().into_iter().zip(grads.param_slices()) {
                for (pv, gv) in p.iter_mut().zip(g) {
                    *pv -= lr * gv;
                }
            }
        }
        OptimizerKind::Adam { beta1, beta2, eps } => {
            let (m, v) = state
                .moments
                .get_or_insert_with(|| (params.zeros_like(), params.zeros_like()));
            if m.shape() != params.shape() {
                return Err(NeuralError::ShapeMismatch("optimizer state belongs to another model".into()));
            }
            let t = state.step as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            let blocks = params
                .param_slices_mut()
                .into_iter()
                .zip(grads.param_slices())
                .zip(m.param_slices_mut())
                .zip(v.param_slices_mut());
            for (((p, g), mb), vb) in blocks {
                for i in 0..p.len() {
                    let gi = g[i];
                    mb[i] = beta1 * mb[i] + (1.0 - beta1) * gi;
                    vb[i] = beta2 * vb[i] + (1.0 - beta2) * gi * gi;
                    let m_hat = mb[i] / c1;
                    let v_hat = vb[i] / c2;
                    p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::model::ModelShape;

    fn scalar_model(value: f64) -> LstmModel {
        let mut m = LstmModel::zeros(ModelShape {
            input_size: 1,
            hidden_size: 1,
            output_size: 1,
            num_layers: 1,
        });
        m.head.b_y[0] = value;
        m
    }

    fn config(optimizer: OptimizerKind, lr: f64) -> TrainConfig {
        TrainConfig {
            optimizer,
            learning_rate: lr,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn sgd_example() {
        let mut p = scalar_model(1.0);
        let g = scalar_model(2.0);
        optimizer_step(&mut p, &g, &mut OptimizerState::new(), &config(OptimizerKind::Sgd, 0.1)).unwrap();
        assert!((p.head.b_y[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut p = scalar_model(0.0);
        let g = scalar_model(1.0);
        optimizer_step(&mut p, &g, &mut OptimizerState::new(), &config(OptimizerKind::adam(), 0.001)).unwrap();
        let expected = -0.001 * 1.0 / (1.0 + 1e-8);
        assert!((p.head.b_y[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let start = crate::neural::init_model(
            ModelShape {
                input_size: 1,
                hidden_size: 3,
                output_size: 1,
                num_layers: 2,
            },
            1,
        );
        let zero = start.zeros_like();
        for kind in [OptimizerKind::Sgd, OptimizerKind::adam()] {
            let mut p = start.clone();
            optimizer_step(&mut p, &zero, &mut OptimizerState::new(), &config(kind, 0.01)).unwrap();
            assert_eq!(p, start);
        }
    }

    #[test]
    fn shape_mismatch() {
        let mut p = scalar_model(0.0);
        let g = LstmModel::zeros(ModelShape {
            input_size: 1,
            hidden_size: 2,
            output_size: 1,
            num_layers: 1,
        });
        assert!(matches!(
            optimizer_step(&mut p, &g, &mut OptimizerState::new(), &TrainConfig::default()),
            Err(NeuralError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn clipping() {
        let mut g = scalar_model(0.0);
        g.layers[0].b[0] = 3.0;
        g.head.b_y[0] = 4.0;
        assert_eq!(clip_global_norm(&mut g, 10.0), 5.0);
        assert_eq!(g.head.b_y[0], 4.0);
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((g.global_norm() - 1.0).abs() < 1e-15);
    }
}
