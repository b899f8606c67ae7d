use std::fs;
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NeuralError;
use crate::dataset::Reader;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FWM1";
pub const CHECKPOINT_VERSION: u8 = 1;
const CHECKPOINT_HEADER_LEN: usize = 4 + 1 + 6 * 4;

/// Gate blocks in the fused weight matrices, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input,
    Forget,
    Output,
    Candidate,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate];

    fn block(self) -> usize {
        self as usize
    }
}

/// Weights of one LSTM layer.
///
/// The four gates share fused storage: `w_x` is `4H × I`, `w_h` is `4H × H`
/// and `b` is `4H`, stacked as input, forget, output, candidate. Row block
/// `Gate::Forget` of `w_x` is `W_xf`, and so on; use the `gate_*` accessors to
/// view a single gate.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub w_x: Array2<f64>,
    pub w_h: Array2<f64>,
    pub b: Array1<f64>,
}

impl LstmLayerParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_x: Array2::zeros((4 * hidden, input)),
            w_h: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w_x.ncols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_h.ncols()
    }

    pub fn gate_w_x(&self, gate: Gate) -> ArrayView2<'_, f64> {
        let h = self.hidden_size();
        self.w_x.slice(s![gate.block() * h..(gate.block() + 1) * h, ..])
    }

    pub fn gate_w_h(&self, gate: Gate) -> ArrayView2<'_, f64> {
        let h = self.hidden_size();
        self.w_h.slice(s![gate.block() * h..(gate.block() + 1) * h, ..])
    }

    pub fn gate_b(&self, gate: Gate) -> ArrayView1<'_, f64> {
        let h = self.hidden_size();
        self.b.slice(s![gate.block() * h..(gate.block() + 1) * h])
    }

    pub fn gate_b_mut(&mut self, gate: Gate) -> ndarray::ArrayViewMut1<'_, f64> {
        let h = self.hidden_size();
        self.b.slice_mut(s![gate.block() * h..(gate.block() + 1) * h])
    }

    fn check(&self) -> Result<(), NeuralError> {
        let h = self.hidden_size();
        if self.w_x.nrows() != 4 * h || self.w_h.nrows() != 4 * h || self.b.len() != 4 * h {
            return Err(NeuralError::DimensionMismatch(format!(
                "layer blocks {}x{}, {}x{}, {} do not agree on hidden size {h}",
                self.w_x.nrows(),
                self.w_x.ncols(),
                self.w_h.nrows(),
                self.w_h.ncols(),
                self.b.len()
            )));
        }
        Ok(())
    }
}

/// Linear read-out `y = W_hy·h + b_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputHeadParams {
    pub w_hy: Array2<f64>,
    pub b_y: Array1<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub input_size: usize,
    pub hidden_size: usize,
    pub output_size: usize,
    pub num_layers: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        Self {
            input_size: 1,
            hidden_size: 256,
            output_size: 1,
            num_layers: 4,
        }
    }
}

/// Stacked LSTM layers plus a linear head. Also used as the gradient
/// container, since gradients share the parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub layers: Vec<LstmLayerParams>,
    pub head: OutputHeadParams,
}

pub type Gradients = LstmModel;

impl LstmModel {
    pub fn zeros(shape: ModelShape) -> Self {
        let layers = (0..shape.num_layers)
            .map(|l| {
                let input = if l == 0 { shape.input_size } else { shape.hidden_size };
                LstmLayerParams::zeros(input, shape.hidden_size)
            })
            .collect();
        Self {
            layers,
            head: OutputHeadParams {
                w_hy: Array2::zeros((shape.output_size, shape.hidden_size)),
                b_y: Array1::zeros(shape.output_size),
            },
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.shape())
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            input_size: self.layers.first().map_or(0, |l| l.input_size()),
            hidden_size: self.head.w_hy.ncols(),
            output_size: self.head.w_hy.nrows(),
            num_layers: self.layers.len(),
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let shape = self.shape();
        if self.layers.is_empty() {
            return Err(NeuralError::DimensionMismatch("model has no layers".into()));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            layer.check()?;
            let expected_input = if l == 0 { shape.input_size } else { shape.hidden_size };
            if layer.hidden_size() != shape.hidden_size || layer.input_size() != expected_input {
                return Err(NeuralError::DimensionMismatch(format!(
                    "layer {l} is {}→{}, expected {expected_input}→{}",
                    layer.input_size(),
                    layer.hidden_size(),
                    shape.hidden_size
                )));
            }
        }
        if self.head.b_y.len() != shape.output_size {
            return Err(NeuralError::DimensionMismatch("head bias length".into()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Parameter blocks in checkpoint order: per layer `w_x`, `w_h`, `b`,
    /// then `w_hy`, `b_y`.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(3 * self.layers.len() + 2);
        for l in &self.layers {
            out.push(l.w_x.as_slice().expect("standard layout"));
            out.push(l.w_h.as_slice().expect("standard layout"));
            out.push(l.b.as_slice().expect("standard layout"));
        }
        out.push(self.head.w_hy.as_slice().expect("standard layout"));
        out.push(self.head.b_y.as_slice().expect("standard layout"));
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(3 * self.layers.len() + 2);
        for l in &mut self.layers {
            out.push(l.w_x.as_slice_mut().expect("standard layout"));
            out.push(l.w_h.as_slice_mut().expect("standard layout"));
            out.push(l.b.as_slice_mut().expect("standard layout"));
        }
        out.push(self.head.w_hy.as_slice_mut().expect("standard layout"));
        out.push(self.head.b_y.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn global_norm(&self) -> f64 {
        self.param_slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.param_slices_mut() {
            s.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Uniform `(-1/√H, 1/√H)` weights, forget-gate bias 1, other biases 0.
pub fn init_model(shape: ModelShape, seed: u64) -> LstmModel {
    assert!(
        shape.input_size > 0 && shape.hidden_size > 0 && shape.output_size > 0 && shape.num_layers > 0,
        "model sizes must be positive"
    );
    let mut model = LstmModel::zeros(shape);
    let k = 1.0 / (shape.hidden_size as f64).sqrt();
    let dist = Uniform::new(-k, k).expect("k > 0");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut model.layers {
        layer.w_x.iter_mut().for_each(|w| *w = dist.sample(&mut rng));
        layer.w_h.iter_mut().for_each(|w| *w = dist.sample(&mut rng));
        layer.gate_b_mut(Gate::Forget).fill(1.0);
    }
    model.head.w_hy.iter_mut().for_each(|w| *w = dist.sample(&mut rng));
    model
}

/// A model plus the window geometry it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: LstmModel,
    pub window_len: usize,
    pub horizon: usize,
}

impl Checkpoint {
    /// `"FWM1"`, version byte, then little-endian `u32` input, hidden, output,
    /// layer count, window length, horizon, followed by every parameter as
    /// `f64` in [`LstmModel::param_slices`] order. Within a layer that is
    /// `W_xi, W_xf, W_xo, W_xc` (row-major), `W_hi, W_hf, W_ho, W_hc`,
    /// `b_i, b_f, b_o, b_c`; the head is `W_hy` then `b_y`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let shape = self.model.shape();
        let mut out = Vec::with_capacity(CHECKPOINT_HEADER_LEN + 8 * self.model.param_count());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.push(CHECKPOINT_VERSION);
        for v in [
            shape.input_size,
            shape.hidden_size,
            shape.output_size,
            shape.num_layers,
            self.window_len,
            self.horizon,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for block in self.model.param_slices() {
            for v in block {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NeuralError> {
        if bytes.len() < 5 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(NeuralError::BadMagic);
        }
        if bytes[4] != CHECKPOINT_VERSION {
            return Err(NeuralError::VersionMismatch(bytes[4]));
        }
        if bytes.len() < CHECKPOINT_HEADER_LEN {
            return Err(NeuralError::CorruptCheckpoint("header truncated".into()));
        }
        let mut r = Reader { bytes, pos: 5 };
        let mut next = || r.u32() as usize;
        let shape = ModelShape {
            input_size: next(),
            hidden_size: next(),
            output_size: next(),
            num_layers: next(),
        };
        let window_len = next();
        let horizon = next();
        if shape.input_size == 0 || shape.hidden_size == 0 || shape.output_size == 0 || shape.num_layers == 0 {
            return Err(NeuralError::CorruptCheckpoint("zero dimension".into()));
        }
        // Bound the allocation before trusting the header.
        let per_layer = |i: usize| 4 * shape.hidden_size * (i + shape.hidden_size + 1);
        let count = per_layer(shape.input_size)
            + (shape.num_layers - 1) * per_layer(shape.hidden_size)
            + shape.output_size * (shape.hidden_size + 1);
        if bytes.len() != CHECKPOINT_HEADER_LEN + 8 * count {
            return Err(NeuralError::CorruptCheckpoint(format!(
                "expected {} parameter bytes, found {}",
                8 * count,
                bytes.len().saturating_sub(CHECKPOINT_HEADER_LEN)
            )));
        }
        let mut model = LstmModel::zeros(shape);
        let mut pos = CHECKPOINT_HEADER_LEN;
        for block in model.param_slices_mut() {
            for v in block.iter_mut() {
                *v = f64::from_le_bytes(bytes[pos..pos + 8].try_into().expect("sized"));
                pos += 8;
            }
        }
        Ok(Self {
            model,
            window_len,
            horizon,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NeuralError> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|source| NeuralError::IoFailure {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NeuralError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| NeuralError::IoFailure {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(hidden: usize, layers: usize) -> ModelShape {
        ModelShape {
            input_size: 1,
            hidden_size: hidden,
            output_size: 1,
            num_layers: layers,
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_model(shape(8, 2), 42);
        let b = init_model(shape(8, 2), 42);
        assert_eq!(a.to_owned().param_slices(), b.param_slices());
        assert_ne!(init_model(shape(8, 2), 43), a);
    }

    #[test]
    fn init_bounds_and_forget_bias() {
        let m = init_model(shape(256, 1), 1);
        let bound = 1.0 / 16.0;
        let l = &m.layers[0];
        assert!(l.w_x.iter().chain(l.w_h.iter()).chain(m.head.w_hy.iter()).all(|w| w.abs() < bound));
        assert!(l.gate_b(Gate::Forget).iter().all(|b| *b == 1.0));
        for g in [Gate::Input, Gate::Output, Gate::Candidate] {
            assert!(l.gate_b(g).iter().all(|b| *b == 0.0));
        }
    }

    #[test]
    fn layer_dimensions() {
        let m = init_model(shape(5, 3), 0);
        m.validate().unwrap();
        assert_eq!(m.layers[0].input_size(), 1);
        assert_eq!(m.layers[1].input_size(), 5);
        assert_eq!(m.layers[2].gate_w_h(Gate::Candidate).dim(), (5, 5));
        assert_eq!(m.param_count(), 4 * 5 * 7 + 2 * 4 * 5 * 11 + 6);
    }

    #[test]
    fn checkpoint_roundtrip_and_errors() {
        let ck = Checkpoint {
            model: init_model(shape(3, 2), 9),
            window_len: 200,
            horizon: 1,
        };
        let bytes = ck.to_bytes();
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ck);

        let mut bad = bytes.clone();
        bad[0] = b'Z';
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(NeuralError::BadMagic)));
        let mut bad = bytes.clone();
        bad[4] = 7;
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(NeuralError::VersionMismatch(7))));
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..bytes.len() - 8]),
            Err(NeuralError::CorruptCheckpoint(_))
        ));
    }

    #[test]
    fn gate_views_follow_storage_order() {
        let mut m = LstmModel::zeros(shape(2, 1));
        m.layers[0].w_x[[2, 0]] = 7.0; // first row of the forget block
        assert_eq!(m.layers[0].gate_w_x(Gate::Forget)[[0, 0]], 7.0);
        assert_eq!(m.layers[0].gate_w_x(Gate::Input).sum(), 0.0);
    }
}
