//! Forward pass and backpropagation through time for the stacked LSTM.
//!
//! Per step and layer, with `x` the layer input and `h`, `c` the previous
//! state:
//!
//! ```text
//! i = σ(W_xi x + W_hi h + b_i)      f = σ(W_xf x + W_hf h + b_f)
//! o = σ(W_xo x + W_ho h + b_o)      c̃ = tanh(W_xc x + W_hc h + b_c)
//! c' = f ⊙ c + i ⊙ c̃                h' = o ⊙ tanh(c')
//! ```
//!
//! and the head reads `y = W_hy h' + b_y` off the top layer. Batched code
//! keeps samples in rows, so a `B × 4H` pre-activation block is
//! `X·W_xᵀ + H·W_hᵀ + b`.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, Axis};

use super::model::{Gate, Gradients, LstmLayerParams, LstmModel};
use super::NeuralError;

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Hidden and cell vectors of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Array1<f64>,
    pub c: Array1<f64>,
}

impl CellState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: Array1::zeros(hidden),
            c: Array1::zeros(hidden),
        }
    }
}

/// Activations kept from a single cell step.
#[derive(Debug, Clone, PartialEq)]
pub struct GateCache {
    pub input: Array1<f64>,
    pub forget: Array1<f64>,
    pub output: Array1<f64>,
    pub candidate: Array1<f64>,
    pub tanh_c: Array1<f64>,
}

/// One unbatched cell step, gate by gate.
pub fn lstm_cell_forward(
    params: &LstmLayerParams,
    x: ArrayView1<'_, f64>,
    prev: &CellState,
) -> Result<(CellState, GateCache), NeuralError> {
    let hidden = params.hidden_size();
    if x.len() != params.input_size() || prev.h.len() != hidden || prev.c.len() != hidden {
        return Err(NeuralError::DimensionMismatch(format!(
            "cell expects input {} and state {hidden}, got {} and {}/{}",
            params.input_size(),
            x.len(),
            prev.h.len(),
            prev.c.len()
        )));
    }
    let pre = |g: Gate| params.gate_w_x(g).dot(&x) + params.gate_w_h(g).dot(&prev.h) + params.gate_b(g);
    let input = pre(Gate::Input).mapv(sigmoid);
    let forget = pre(Gate::Forget).mapv(sigmoid);
    let output = pre(Gate::Output).mapv(sigmoid);
    let candidate = pre(Gate::Candidate).mapv(f64::tanh);
    let c = &forget * &prev.c + &input * &candidate;
    let tanh_c = c.mapv(f64::tanh);
    let h = &output * &tanh_c;
    Ok((
        CellState { h, c },
        GateCache {
            input,
            forget,
            output,
            candidate,
            tanh_c,
        },
    ))
}

struct LayerCache {
    /// `h[t]` is the state entering step `t`; `h[0]` is zero.
    h: Vec<Array2<f64>>,
    c: Vec<Array2<f64>>,
    /// Activated gates, `B × 4H`, blocks ordered as [`Gate::ALL`].
    gates: Vec<Array2<f64>>,
    tanh_c: Vec<Array2<f64>>,
}

/// Everything [`backward`] needs from a forward pass.
pub struct ForwardCache {
    inputs: Array3<f64>,
    layers: Vec<LayerCache>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.inputs.dim().0
    }

    pub fn steps(&self) -> usize {
        self.inputs.dim().1
    }

    /// Activated `(input, forget, output, candidate)` gates of `layer` at step `t`
    /// for batch row `b`, followed by `tanh(c)`.
    pub fn gate_activations(&self, layer: usize, t: usize, b: usize) -> GateCache {
        let lc = &self.layers[layer];
        let hidden = lc.tanh_c[t].ncols();
        let row = lc.gates[t].row(b);
        let block = |g: Gate| row.slice(s![g as usize * hidden..(g as usize + 1) * hidden]).to_owned();
        GateCache {
            input: block(Gate::Input),
            forget: block(Gate::Forget),
            output: block(Gate::Output),
            candidate: block(Gate::Candidate),
            tanh_c: lc.tanh_c[t].row(b).to_owned(),
        }
    }
}

/// Advances one layer by one step for a batch. Writes the activated gates
/// into `gates` and returns `(c', tanh c', h')`.
fn layer_step(
    layer: &LstmLayerParams,
    x: &ArrayView2<'_, f64>,
    h_prev: &ArrayView2<'_, f64>,
    c_prev: &ArrayView2<'_, f64>,
    gates: &mut Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let hidden = layer.hidden_size();
    let dim = gates.raw_dim();
    gates.assign(&layer.b.broadcast(dim).expect("bias row"));
    general_mat_mul(1.0, x, &layer.w_x.t(), 1.0, gates);
    general_mat_mul(1.0, h_prev, &layer.w_h.t(), 1.0, gates);

    let batch = gates.nrows();
    let mut c = Array2::zeros((batch, hidden));
    let mut tanh_c = Array2::zeros((batch, hidden));
    let mut h = Array2::zeros((batch, hidden));
    for b in 0..batch {
        let mut grow = gates.row_mut(b);
        let g = grow.as_slice_mut().expect("row-major");
        for v in &mut g[..3 * hidden] {
            *v = sigmoid(*v);
        }
        for v in &mut g[3 * hidden..] {
            *v = v.tanh();
        }
        let (i, rest) = g.split_at(hidden);
        let (f, rest) = rest.split_at(hidden);
        let (o, cand) = rest.split_at(hidden);
        let cp = c_prev.row(b);
        let mut crow = c.row_mut(b);
        let mut trow = tanh_c.row_mut(b);
        let mut hrow = h.row_mut(b);
        for k in 0..hidden {
            let cv = f[k] * cp[k] + i[k] * cand[k];
            let tc = cv.tanh();
            crow[k] = cv;
            trow[k] = tc;
            hrow[k] = o[k] * tc;
        }
    }
    (c, tanh_c, h)
}

fn check_inputs(model: &LstmModel, inputs: &ArrayView3<'_, f64>) -> Result<(), NeuralError> {
    let (batch, steps, features) = inputs.dim();
    if batch == 0 || steps == 0 {
        return Err(NeuralError::DimensionMismatch("empty batch or sequence".into()));
    }
    if features != model.shape().input_size {
        return Err(NeuralError::DimensionMismatch(format!(
            "inputs carry {features} features, model expects {}",
            model.shape().input_size
        )));
    }
    Ok(())
}

fn apply_head(model: &LstmModel, h: &ArrayView2<'_, f64>) -> Array2<f64> {
    let mut y = model
        .head
        .b_y
        .broadcast((h.nrows(), model.head.b_y.len()))
        .expect("bias row")
        .to_owned();
    general_mat_mul(1.0, h, &model.head.w_hy.t(), 1.0, &mut y);
    y
}

/// Runs a batch of sequences (`B × T × input`) from zero state and returns
/// the head output at every step (`B × T × output`) with the cache for
/// [`backward`].
pub fn forward_batch(
    model: &LstmModel,
    inputs: ArrayView3<'_, f64>,
) -> Result<(Array3<f64>, ForwardCache), NeuralError> {
    check_inputs(model, &inputs)?;
    let (batch, steps, _) = inputs.dim();
    let shape = model.shape();
    let hidden = shape.hidden_size;
    let mut caches: Vec<LayerCache> = Vec::with_capacity(model.layers.len());
    for (l, layer) in model.layers.iter().enumerate() {
        let mut lc = LayerCache {
            h: Vec::with_capacity(steps + 1),
            c: Vec::with_capacity(steps + 1),
            gates: Vec::with_capacity(steps),
            tanh_c: Vec::with_capacity(steps),
        };
        lc.h.push(Array2::zeros((batch, hidden)));
        lc.c.push(Array2::zeros((batch, hidden)));
        for t in 0..steps {
            let x = if l == 0 {
                inputs.slice(s![.., t, ..])
            } else {
                caches[l - 1].h[t + 1].view()
            };
            let mut gates = Array2::zeros((batch, 4 * hidden));
            let (c, tanh_c, h) = layer_step(layer, &x, &lc.h[t].view(), &lc.c[t].view(), &mut gates);
            lc.gates.push(gates);
            lc.tanh_c.push(tanh_c);
            lc.c.push(c);
            lc.h.push(h);
        }
        caches.push(lc);
    }
    let top = caches.last().expect("at least one layer");
    let mut outputs = Array3::zeros((batch, steps, shape.output_size));
    for t in 0..steps {
        let y = apply_head(model, &top.h[t + 1].view());
        outputs.slice_mut(s![.., t, ..]).assign(&y);
    }
    Ok((
        outputs,
        ForwardCache {
            inputs: inputs.to_owned(),
            layers: caches,
        },
    ))
}

/// Single-sequence forward pass: `T × input` in, `T × output` out.
pub fn forward_sequence(
    model: &LstmModel,
    inputs: ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, ForwardCache), NeuralError> {
    let batched = inputs.insert_axis(Axis(0));
    let (out, cache) = forward_batch(model, batched)?;
    Ok((out.index_axis_move(Axis(0), 0), cache))
}

/// Last-step head output for every sequence without keeping a cache.
pub fn predict_last(model: &LstmModel, inputs: ArrayView3<'_, f64>) -> Result<Array2<f64>, NeuralError> {
    check_inputs(model, &inputs)?;
    let (batch, steps, _) = inputs.dim();
    let hidden = model.shape().hidden_size;
    let mut states: Vec<(Array2<f64>, Array2<f64>)> = model
        .layers
        .iter()
        .map(|_| (Array2::zeros((batch, hidden)), Array2::zeros((batch, hidden))))
        .collect();
    let mut gates = Array2::zeros((batch, 4 * hidden));
    for t in 0..steps {
        for (l, layer) in model.layers.iter().enumerate() {
            let (below, rest) = states.split_at_mut(l);
            let x = if l == 0 {
                inputs.slice(s![.., t, ..])
            } else {
                below[l - 1].0.view()
            };
            let (h_prev, c_prev) = &rest[0];
            let (c, _, h) = layer_step(layer, &x, &h_prev.view(), &c_prev.view(), &mut gates);
            rest[0] = (h, c);
        }
    }
    Ok(apply_head(model, &states.last().expect("layers").0.view()))
}

/// Reverse-mode gradients of a scalar loss given `∂loss/∂outputs`
/// (`B × T × output`, zero where an output does not enter the loss).
pub fn backward(
    model: &LstmModel,
    cache: &ForwardCache,
    d_outputs: ArrayView3<'_, f64>,
) -> Result<Gradients, NeuralError> {
    let (batch, steps) = (cache.batch(), cache.steps());
    let shape = model.shape();
    if d_outputs.dim() != (batch, steps, shape.output_size) || cache.layers.len() != model.layers.len() {
        return Err(NeuralError::CacheMismatch(format!(
            "cache holds {batch}×{steps} over {} layers, gradient is {:?}",
            cache.layers.len(),
            d_outputs.dim()
        )));
    }
    let hidden = shape.hidden_size;
    let mut grads = model.zeros_like();

    let top = cache.layers.last().expect("layers");
    let mut dh_above: Vec<Array2<f64>> = vec![Array2::zeros((batch, hidden)); steps];
    for (t, dh) in dh_above.iter_mut().enumerate() {
        let dy = d_outputs.slice(s![.., t, ..]);
        if dy.iter().all(|v| *v == 0.0) {
            continue;
        }
        general_mat_mul(1.0, &dy.t(), &top.h[t + 1], 1.0, &mut grads.head.w_hy);
        grads.head.b_y += &dy.sum_axis(Axis(0));
        general_mat_mul(1.0, &dy, &model.head.w_hy, 1.0, dh);
    }

    for l in (0..model.layers.len()).rev() {
        let layer = &model.layers[l];
        let lc = &cache.layers[l];
        let grad = &mut grads.layers[l];
        let mut dh_next: Array2<f64> = Array2::zeros((batch, hidden));
        let mut dc_next: Array2<f64> = Array2::zeros((batch, hidden));
        let mut dz: Array2<f64> = Array2::zeros((batch, 4 * hidden));
        let mut dx_below: Vec<Array2<f64>> = if l > 0 {
            vec![Array2::zeros((batch, hidden)); steps]
        } else {
            Vec::new()
        };

        for t in (0..steps).rev() {
            let dh = &mut dh_above[t];
            *dh += &dh_next;
            for b in 0..batch {
                let gates = lc.gates[t].row(b);
                let g = gates.as_slice().expect("row-major");
                let (i, rest) = g.split_at(hidden);
                let (f, rest) = rest.split_at(hidden);
                let (o, cand) = rest.split_at(hidden);
                let tc = lc.tanh_c[t].row(b);
                let cp = lc.c[t].row(b);
                let dhr = dh.row(b);
                let mut dcr = dc_next.row_mut(b);
                let mut dzr = dz.row_mut(b);
                let dzs = dzr.as_slice_mut().expect("row-major");
                for k in 0..hidden {
                    let dc = dhr[k] * o[k] * (1.0 - tc[k] * tc[k]) + dcr[k];
                    let d_o = dhr[k] * tc[k];
                    let d_i = dc * cand[k];
                    let d_g = dc * i[k];
                    let d_f = dc * cp[k];
                    dcr[k] = dc * f[k];
                    dzs[k] = d_i * i[k] * (1.0 - i[k]);
                    dzs[hidden + k] = d_f * f[k] * (1.0 - f[k]);
                    dzs[2 * hidden + k] = d_o * o[k] * (1.0 - o[k]);
                    dzs[3 * hidden + k] = d_g * (1.0 - cand[k] * cand[k]);
                }
            }
            let x = if l == 0 {
                cache.inputs.slice(s![.., t, ..])
            } else {
                cache.layers[l - 1].h[t + 1].view()
            };
            general_mat_mul(1.0, &dz.t(), &x, 1.0, &mut grad.w_x);
            general_mat_mul(1.0, &dz.t(), &lc.h[t], 1.0, &mut grad.w_h);
            grad.b += &dz.sum_axis(Axis(0));
            if l > 0 {
                general_mat_mul(1.0, &dz, &layer.w_x, 0.0, &mut dx_below[t]);
            }
            general_mat_mul(1.0, &dz, &layer.w_h, 0.0, &mut dh_next);
        }
        if l > 0 {
            dh_above = dx_below;
        }
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::model::{init_model, ModelShape};
    use ndarray::{array, Array};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shape(input: usize, hidden: usize, layers: usize, output: usize) -> ModelShape {
        ModelShape {
            input_size: input,
            hidden_size: hidden,
            output_size: output,
            num_layers: layers,
        }
    }

    #[test]
    fn zero_cell() {
        let p = LstmLayerParams::zeros(1, 3);
        let (state, cache) = lstm_cell_forward(&p, array![0.0].view(), &CellState::zeros(3)).unwrap();
        assert_eq!(cache.input, Array1::from_elem(3, 0.5));
        assert_eq!(cache.forget, Array1::from_elem(3, 0.5));
        assert_eq!(cache.output, Array1::from_elem(3, 0.5));
        assert_eq!(cache.candidate, Array1::<f64>::zeros(3));
        assert_eq!(state.c, Array1::<f64>::zeros(3));
        assert_eq!(state.h, Array1::<f64>::zeros(3));
    }

    #[test]
    fn zero_weights_carry_half_the_cell() {
        let p = LstmLayerParams::zeros(2, 3);
        let prev = CellState {
            h: Array1::zeros(3),
            c: array![1.0, -2.0, 0.25],
        };
        let (state, _) = lstm_cell_forward(&p, array![0.3, -0.7].view(), &prev).unwrap();
        for k in 0..3 {
            let c = 0.5 * prev.c[k];
            assert_eq!(state.c[k], c);
            assert_eq!(state.h[k], 0.5 * c.tanh());
        }
    }

    #[test]
    fn hand_worked_two_unit_cell() {
        let mut p = LstmLayerParams::zeros(1, 2);
        // rows: i0 i1 f0 f1 o0 o1 c0 c1
        let wx = [0.1, -0.2, 0.3, 0.05, -0.1, 0.2, 0.4, -0.3];
        let wh = [
            [0.05, -0.05],
            [0.1, 0.0],
            [0.0, 0.2],
            [-0.1, 0.1],
            [0.3, -0.2],
            [0.0, 0.1],
            [0.2, 0.2],
            [-0.1, 0.3],
        ];
        let b = [0.0, 0.1, 1.0, 1.0, -0.1, 0.0, 0.05, -0.05];
        for r in 0..8 {
            p.w_x[[r, 0]] = wx[r];
            p.w_h[[r, 0]] = wh[r][0];
            p.w_h[[r, 1]] = wh[r][1];
            p.b[r] = b[r];
        }
        let x = 0.8;
        let (h0, c0) = ([0.2, -0.4], [0.5, 0.1]);
        let prev = CellState {
            h: array![h0[0], h0[1]],
            c: array![c0[0], c0[1]],
        };
        let (state, _) = lstm_cell_forward(&p, array![x].view(), &prev).unwrap();

        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        let pre = |r: usize| wx[r] * x + wh[r][0] * h0[0] + wh[r][1] * h0[1] + b[r];
        for (k, &c_prev) in c0.iter().enumerate() {
            let i = sig(pre(k));
            let f = sig(pre(2 + k));
            let o = sig(pre(4 + k));
            let g = pre(6 + k).tanh();
            let c = f * c_prev + i * g;
            let h = o * c.tanh();
            assert!((state.c[k] - c).abs() <= 1e-12);
            assert!((state.h[k] - h).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_model_outputs_zero() {
        let m = LstmModel::zeros(shape(1, 4, 2, 1));
        let inputs = Array::from_shape_fn((6, 1), |(t, _)| t as f64 - 2.0);
        let (out, _) = forward_sequence(&m, inputs.view()).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_step_matches_cell_plus_head() {
        let m = init_model(shape(2, 5, 1, 3), 4);
        let x = array![[0.3, -0.9]];
        let (out, _) = forward_sequence(&m, x.view()).unwrap();
        let (state, _) = lstm_cell_forward(&m.layers[0], x.row(0), &CellState::zeros(5)).unwrap();
        let y = m.head.w_hy.dot(&state.h) + &m.head.b_y;
        for k in 0..3 {
            assert!((out[[0, k]] - y[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn stacked_sequence_matches_stepwise_reference() {
        let m = init_model(shape(1, 3, 2, 1), 17);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let inputs = Array2::from_shape_vec((4, 1), xs.clone()).unwrap();
        let (out, _) = forward_sequence(&m, inputs.view()).unwrap();

        let mut states = [CellState::zeros(3), CellState::zeros(3)];
        for (t, &x) in xs.iter().enumerate() {
            let mut feed = array![x];
            for (l, st) in states.iter_mut().enumerate() {
                let (next, _) = lstm_cell_forward(&m.layers[l], feed.view(), st).unwrap();
                feed = next.h.clone();
                *st = next;
            }
            let y = m.head.w_hy.dot(&feed) + &m.head.b_y;
            assert!((out[[t, 0]] - y[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn predict_last_matches_cached_forward() {
        let m = init_model(shape(1, 6, 3, 2), 8);
        let inputs = Array3::from_shape_fn((5, 7, 1), |(b, t, _)| ((b * 7 + t) as f64 * 0.37).sin());
        let (out, _) = forward_batch(&m, inputs.view()).unwrap();
        let last = predict_last(&m, inputs.view()).unwrap();
        for b in 0..5 {
            for k in 0..2 {
                assert_eq!(last[[b, k]], out[[b, 6, k]]);
            }
        }
    }

    #[test]
    fn batch_rows_are_independent() {
        let m = init_model(shape(1, 4, 2, 1), 2);
        let inputs = Array3::from_shape_fn((3, 5, 1), |(b, t, _)| (b as f64 + 1.0) * (t as f64 * 0.5).cos());
        let (out, _) = forward_batch(&m, inputs.view()).unwrap();
        for b in 0..3 {
            let (single, _) = forward_sequence(&m, inputs.slice(s![b, .., ..])).unwrap();
            for t in 0..5 {
                assert!((single[[t, 0]] - out[[b, t, 0]]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gate_ranges() {
        let m = init_model(shape(1, 8, 2, 1), 12);
        let inputs = Array3::from_shape_fn((2, 10, 1), |(b, t, _)| ((b + t) as f64).sin() * 3.0);
        let (_, cache) = forward_batch(&m, inputs.view()).unwrap();
        for l in 0..2 {
            for t in 0..10 {
                for b in 0..2 {
                    let g = cache.gate_activations(l, t, b);
                    for v in g.input.iter().chain(&g.forget).chain(&g.output) {
                        assert!(*v > 0.0 && *v < 1.0);
                    }
                    for v in g.candidate.iter().chain(&g.tanh_c) {
                        assert!(*v > -1.0 && *v < 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn backward_is_linear_in_upstream_gradient() {
        let m = init_model(shape(1, 4, 2, 1), 5);
        let inputs = Array3::from_shape_fn((3, 6, 1), |(b, t, _)| ((b * 6 + t) as f64 * 0.21).sin());
        let (_, cache) = forward_batch(&m, inputs.view()).unwrap();

        let zero = Array3::zeros((3, 6, 1));
        let g0 = backward(&m, &cache, zero.view()).unwrap();
        assert!(g0.param_slices().iter().all(|s| s.iter().all(|v| *v == 0.0)));

        let d = Array3::from_shape_fn((3, 6, 1), |(b, t, _)| if t == 5 { 0.3 - b as f64 * 0.2 } else { 0.0 });
        let g1 = backward(&m, &cache, d.view()).unwrap();
        let g2 = backward(&m, &cache, (&d * 2.0).view()).unwrap();
        for (a, b) in g1.param_slices().iter().zip(g2.param_slices()) {
            for (x, y) in a.iter().zip(b) {
                assert!((2.0 * x - y).abs() <= 1e-12 * x.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn dimension_errors() {
        let m = init_model(shape(1, 2, 1, 1), 0);
        let bad = Array3::<f64>::zeros((1, 3, 2));
        assert!(matches!(forward_batch(&m, bad.view()), Err(NeuralError::DimensionMismatch(_))));
        let ok = Array3::<f64>::zeros((1, 3, 1));
        let (_, cache) = forward_batch(&m, ok.view()).unwrap();
        let wrong = Array3::<f64>::zeros((1, 4, 1));
        assert!(matches!(backward(&m, &cache, wrong.view()), Err(NeuralError::CacheMismatch(_))));
        let p = LstmLayerParams::zeros(2, 2);
        assert!(lstm_cell_forward(&p, array![1.0].view(), &CellState::zeros(2)).is_err());
    }
}
