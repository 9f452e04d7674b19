//! Network definition, initialization, and the inference forward pass.
//!
//! Batched sequences are packed into a single matrix of shape
//! `(input_dim, steps * batch)` where the column `t * batch + b` holds the
//! input of sequence `b` at step `t`. One recurrence step is then two
//! matrix products per layer, which is also the layout the training pass
//! reuses. Inference keeps only the running hidden and cell states, so
//! memory stays flat in the sequence length.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, LinalgScalar, ScalarOperand};
use num_traits::{Float, NumAssignOps};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;
use std::collections::BTreeMap;

use super::preprocess::StandardizedIncrements;
use super::train::LossKind;
use crate::error::{Error, Result};

/// Floating-point type the network computes in. Training runs in `f32`;
/// gradient checks instantiate the same code at `f64`.
pub trait Scalar:
    Float + NumAssignOps + LinalgScalar + ScalarOperand + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> f32 {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> f64 {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}

pub(crate) fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// Batch width used when estimating over many paths at once.
pub const INFERENCE_BATCH: usize = 128;

/// Shape of the network. The default is the reference regressor: scalar
/// input, two stacked LSTM layers of width 128, and a three-layer head
/// tapering 128 -> 64 -> 1 with a PReLU after the first linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub input_dim: usize,
    pub lstm_layers: usize,
    pub hidden: usize,
    pub head_dims: [usize; 3],
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            input_dim: 1,
            lstm_layers: 2,
            hidden: 128,
            head_dims: [128, 64, 1],
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.lstm_layers == 0 || self.hidden == 0 {
            return Err(Error::InvalidParameter(
                "architecture dimensions out of [1,inf)".into(),
            ));
        }
        if self.head_dims[0] == 0 || self.head_dims[1] == 0 {
            return Err(Error::InvalidParameter(
                "head dimensions out of [1,inf)".into(),
            ));
        }
        if self.head_dims[2] != 1 {
            return Err(Error::InvalidParameter(format!(
                "head output dimension must be 1, got {}",
                self.head_dims[2]
            )));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        let mut total = 0;
        for l in 0..self.lstm_layers {
            let input = if l == 0 { self.input_dim } else { self.hidden };
            total += 4 * self.hidden * (input + self.hidden) + 4 * self.hidden;
        }
        total += self.head_dims[0] * self.hidden + self.head_dims[0];
        total += 1; // prelu slope
        total += self.head_dims[1] * self.head_dims[0] + self.head_dims[1];
        total += self.head_dims[2] * self.head_dims[1] + self.head_dims[2];
        total
    }
}

/// One LSTM layer. Gate rows of the stacked matrices are ordered
/// input, forget, cell candidate, output; each block is `hidden` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer<F> {
    pub w_input: Array2<F>,
    pub w_recurrent: Array2<F>,
    pub bias: Array1<F>,
}

/// MLP head over the pooled hidden state. The PReLU slope is a single
/// learnable parameter kept as a one-element tensor so the optimizer and
/// the serializer can treat every parameter uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct Head<F> {
    pub fc1_w: Array2<F>,
    pub fc1_b: Array1<F>,
    pub prelu_slope: Array1<F>,
    pub fc2_w: Array2<F>,
    pub fc2_b: Array1<F>,
    pub fc3_w: Array2<F>,
    pub fc3_b: Array1<F>,
}

/// Provenance of a trained model, carried through serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelMeta {
    pub loss: LossKind,
    pub epochs: u32,
    pub sequence_length: u32,
    pub seed: u64,
}

impl Default for ModelMeta {
    fn default() -> Self {
        ModelMeta {
            loss: LossKind::Mse,
            epochs: 0,
            sequence_length: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel<F> {
    pub arch: Architecture,
    pub layers: Vec<LstmLayer<F>>,
    pub head: Head<F>,
    pub meta: ModelMeta,
}

impl<F: Scalar> LstmModel<F> {
    /// Fresh model with weights uniform in +-1/sqrt(fan-in), biases zero
    /// except the forget gate at +1, PReLU slope 0.25. All draws happen
    /// in f64 before casting, so a given seed produces the same values at
    /// every precision.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        Self::init_with_rng(arch, &mut ChaCha12Rng::seed_from_u64(seed))
    }

    /// As [`LstmModel::init`] but drawing from a caller-owned generator.
    /// Draw order: per layer the input then the recurrent matrix, then
    /// the three head matrices, each row-major.
    pub fn init_with_rng(arch: Architecture, rng: &mut ChaCha12Rng) -> Result<Self> {
        arch.validate()?;
        let mut uniform = |rows: usize, cols: usize| -> Array2<F> {
            let limit = 1.0 / (cols as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| {
                F::from_f64(limit * (2.0 * rng.gen::<f64>() - 1.0))
            })
        };

        let h = arch.hidden;
        let mut layers = Vec::with_capacity(arch.lstm_layers);
        for l in 0..arch.lstm_layers {
            let input = if l == 0 { arch.input_dim } else { h };
            let w_input = uniform(4 * h, input);
            let w_recurrent = uniform(4 * h, h);
            let mut bias = Array1::zeros(4 * h);
            // forget-gate block starts open so early gradients flow
            bias.slice_mut(s![h..2 * h]).fill(F::one());
            layers.push(LstmLayer {
                w_input,
                w_recurrent,
                bias,
            });
        }

        let fc1_w = uniform(arch.head_dims[0], h);
        let fc2_w = uniform(arch.head_dims[1], arch.head_dims[0]);
        let fc3_w = uniform(arch.head_dims[2], arch.head_dims[1]);
        let head = Head {
            fc1_w,
            fc1_b: Array1::zeros(arch.head_dims[0]),
            prelu_slope: Array1::from_elem(1, F::from_f64(0.25)),
            fc2_w,
            fc2_b: Array1::zeros(arch.head_dims[1]),
            fc3_w,
            fc3_b: Array1::zeros(arch.head_dims[2]),
        };

        Ok(LstmModel {
            arch,
            layers,
            head,
            meta: ModelMeta::default(),
        })
    }

    /// All-zero model (PReLU slope included). Useful as a fixed point:
    /// every gate halves, the candidate is zero, so the output is zero.
    pub fn zeroed(arch: Architecture) -> Result<Self> {
        let mut model = Self::init(arch, 0)?;
        for p in model.param_slices_mut() {
            for v in p.iter_mut() {
                *v = F::zero();
            }
        }
        Ok(model)
    }

    /// Same weights at another precision.
    pub fn cast<G: Scalar>(&self) -> LstmModel<G> {
        let recast2 = |a: &Array2<F>| a.mapv(|v| G::from_f64(v.as_f64()));
        let recast1 = |a: &Array1<F>| a.mapv(|v| G::from_f64(v.as_f64()));
        LstmModel {
            arch: self.arch,
            layers: self
                .layers
                .iter()
                .map(|l| LstmLayer {
                    w_input: recast2(&l.w_input),
                    w_recurrent: recast2(&l.w_recurrent),
                    bias: recast1(&l.bias),
                })
                .collect(),
            head: Head {
                fc1_w: recast2(&self.head.fc1_w),
                fc1_b: recast1(&self.head.fc1_b),
                prelu_slope: recast1(&self.head.prelu_slope),
                fc2_w: recast2(&self.head.fc2_w),
                fc2_b: recast1(&self.head.fc2_b),
                fc3_w: recast2(&self.head.fc3_w),
                fc3_b: recast1(&self.head.fc3_b),
            },
            meta: self.meta,
        }
    }

    /// Parameters as flat slices in the canonical order: per layer the
    /// input matrix, recurrent matrix, bias; then fc1, its bias, the
    /// PReLU slope, fc2, its bias, fc3, its bias. Gradient containers
    /// iterate in the same order, so slot `i` here lines up with slot
    /// `i` of [`Gradients::slices`](crate::neural::Gradients::slices).
    pub fn param_slices_mut(&mut self) -> Vec<&mut [F]> {
        let mut out = Vec::with_capacity(3 * self.layers.len() + 7);
        for l in self.layers.iter_mut() {
            out.push(l.w_input.as_slice_mut().expect("owned tensors are contiguous"));
            out.push(l.w_recurrent.as_slice_mut().expect("owned tensors are contiguous"));
            out.push(l.bias.as_slice_mut().expect("owned tensors are contiguous"));
        }
        let h = &mut self.head;
        out.push(h.fc1_w.as_slice_mut().expect("owned tensors are contiguous"));
        out.push(h.fc1_b.as_slice_mut().expect("owned tensors are contiguous"));
        out.push(h.prelu_slope.as_slice_mut().expect("owned tensors are contiguous"));
        out.push(h.fc2_w.as_slice_mut().expect("owned tensors are contiguous"));
        out.push(h.fc2_b.as_slice_mut().expect("owned tensors are contiguous"));
        out.push(h.fc3_w.as_slice_mut().expect("owned tensors are contiguous"));
        out.push(h.fc3_b.as_slice_mut().expect("owned tensors are contiguous"));
        out
    }

    /// Read-only view of the parameters, same order as
    /// [`param_slices_mut`](Self::param_slices_mut).
    pub fn param_slices(&self) -> Vec<&[F]> {
        let mut out = Vec::with_capacity(3 * self.layers.len() + 7);
        for l in self.layers.iter() {
            out.push(l.w_input.as_slice().expect("owned tensors are contiguous"));
            out.push(l.w_recurrent.as_slice().expect("owned tensors are contiguous"));
            out.push(l.bias.as_slice().expect("owned tensors are contiguous"));
        }
        let h = &self.head;
        out.push(h.fc1_w.as_slice().expect("owned tensors are contiguous"));
        out.push(h.fc1_b.as_slice().expect("owned tensors are contiguous"));
        out.push(h.prelu_slope.as_slice().expect("owned tensors are contiguous"));
        out.push(h.fc2_w.as_slice().expect("owned tensors are contiguous"));
        out.push(h.fc2_b.as_slice().expect("owned tensors are contiguous"));
        out.push(h.fc3_w.as_slice().expect("owned tensors are contiguous"));
        out.push(h.fc3_b.as_slice().expect("owned tensors are contiguous"));
        out
    }

    /// Forward pass over packed sequences, keeping only rolling state.
    /// `inputs` has shape `(input_dim, steps * batch)` in step-major
    /// column order. Returns one unclamped regression value per sequence.
    pub fn forward_packed(&self, inputs: ArrayView2<F>, steps: usize) -> Result<Array1<F>> {
        let (h, batch) = self.check_packed(inputs.dim(), steps)?;
        let mut hs: Vec<Array2<F>> =
            (0..self.layers.len()).map(|_| Array2::zeros((h, batch))).collect();
        let mut cs: Vec<Array2<F>> = hs.clone();
        let mut z = Array2::<F>::zeros((4 * h, batch));
        let mut pooled = Array2::<F>::zeros((h, batch));

        for t in 0..steps {
            for (l, layer) in self.layers.iter().enumerate() {
                let (below, cur) = hs.split_at_mut(l);
                let x = if l == 0 {
                    inputs.slice(s![.., t * batch..(t + 1) * batch])
                } else {
                    below[l - 1].view()
                };
                general_mat_mul(F::one(), &layer.w_input, &x, F::zero(), &mut z);
                general_mat_mul(F::one(), &layer.w_recurrent, &cur[0], F::one(), &mut z);
                for (r, mut row) in z.rows_mut().into_iter().enumerate() {
                    row += layer.bias[r];
                }
                cell_update(&mut z, &mut cs[l], &mut cur[0], h);
            }
            pooled += hs.last().expect("at least one layer");
        }
        pooled.mapv_inplace(|v| v / F::from_f64(steps as f64));

        let out = head_forward(&self.head, &pooled).out;
        if out.iter().any(|v| !v.as_f64().is_finite()) {
            return Err(Error::NonFinite("network output is not finite".into()));
        }
        Ok(out)
    }

    /// Estimates the Hurst exponent of one path.
    pub fn estimate(&self, path: &[f64]) -> Result<f64> {
        let seq = StandardizedIncrements::new(path)?;
        let steps = seq.len();
        let packed = pack_sequences::<F>(std::slice::from_ref(&seq))?;
        Ok(self.forward_packed(packed.view(), steps)?[0].as_f64())
    }

    /// Estimates many paths, batching equal lengths together. Results are
    /// ordered like the input regardless of the internal grouping.
    pub fn estimate_many<S: AsRef<[f64]>>(&self, paths: &[S]) -> Result<Vec<f64>> {
        let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut seqs = Vec::with_capacity(paths.len());
        for (i, p) in paths.iter().enumerate() {
            let seq = StandardizedIncrements::new(p.as_ref())?;
            by_len.entry(seq.len()).or_default().push(i);
            seqs.push(seq);
        }
        let mut out = vec![0.0; paths.len()];
        for (steps, indices) in by_len {
            for chunk in indices.chunks(INFERENCE_BATCH) {
                let group: Vec<StandardizedIncrements> =
                    chunk.iter().map(|&i| seqs[i].clone()).collect();
                let packed = pack_sequences::<F>(&group)?;
                let values = self.forward_packed(packed.view(), steps)?;
                for (&i, v) in chunk.iter().zip(values.iter()) {
                    out[i] = v.as_f64();
                }
            }
        }
        Ok(out)
    }

    fn check_packed(&self, dim: (usize, usize), steps: usize) -> Result<(usize, usize)> {
        let (rows, cols) = dim;
        if rows != self.arch.input_dim {
            return Err(Error::InvalidParameter(format!(
                "packed input rows {rows} do not match input dimension {}",
                self.arch.input_dim
            )));
        }
        if steps == 0 || cols == 0 || cols % steps != 0 {
            return Err(Error::InvalidParameter(format!(
                "packed input of {cols} columns does not divide into {steps} steps"
            )));
        }
        Ok((self.arch.hidden, cols / steps))
    }
}

/// Packs standardized sequences of one common length into the step-major
/// `(1, steps * batch)` matrix the forward passes consume.
pub fn pack_sequences<F: Scalar>(seqs: &[StandardizedIncrements]) -> Result<Array2<F>> {
    if seqs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let steps = seqs[0].len();
    if seqs.iter().any(|s| s.len() != steps) {
        return Err(Error::InvalidParameter(
            "sequences in a batch must share one length".into(),
        ));
    }
    let batch = seqs.len();
    let mut packed = Array2::zeros((1, steps * batch));
    for (b, seq) in seqs.iter().enumerate() {
        for (t, &v) in seq.values().iter().enumerate() {
            packed[(0, t * batch + b)] = F::from_f64(v);
        }
    }
    Ok(packed)
}

/// In-place gate application and state update for one step.
/// `z` holds pre-activations stacked [input, forget, candidate, output];
/// afterwards it holds the post-activation gates (the training pass keeps
/// them for the backward sweep).
pub(crate) fn cell_update<F: Scalar>(
    z: &mut Array2<F>,
    c: &mut Array2<F>,
    h_out: &mut Array2<F>,
    hidden: usize,
) {
    let cols = z.ncols();
    let hb = hidden * cols;
    let zs = z.as_slice_mut().expect("z is owned");
    let (zi, rest) = zs.split_at_mut(hb);
    let (zf, rest) = rest.split_at_mut(hb);
    let (zg, zo) = rest.split_at_mut(hb);
    let cs = c.as_slice_mut().expect("c is owned");
    let hs = h_out.as_slice_mut().expect("h is owned");
    for k in 0..hb {
        let i = sigmoid(zi[k]);
        let f = sigmoid(zf[k]);
        let g = zg[k].tanh();
        let o = sigmoid(zo[k]);
        let cn = f * cs[k] + i * g;
        zi[k] = i;
        zf[k] = f;
        zg[k] = g;
        zo[k] = o;
        cs[k] = cn;
        hs[k] = o * cn.tanh();
    }
}

pub(crate) struct HeadForward<F> {
    pub z1: Array2<F>,
    pub a1: Array2<F>,
    pub a2: Array2<F>,
    pub out: Array1<F>,
}

pub(crate) fn head_forward<F: Scalar>(head: &Head<F>, pooled: &Array2<F>) -> HeadForward<F> {
    let batch = pooled.ncols();
    let slope = head.prelu_slope[0];

    let mut z1 = Array2::zeros((head.fc1_w.nrows(), batch));
    general_mat_mul(F::one(), &head.fc1_w, pooled, F::zero(), &mut z1);
    for (r, mut row) in z1.rows_mut().into_iter().enumerate() {
        row += head.fc1_b[r];
    }
    let a1 = z1.mapv(|v| if v > F::zero() { v } else { slope * v });

    let mut a2 = Array2::zeros((head.fc2_w.nrows(), batch));
    general_mat_mul(F::one(), &head.fc2_w, &a1, F::zero(), &mut a2);
    for (r, mut row) in a2.rows_mut().into_iter().enumerate() {
        row += head.fc2_b[r];
    }

    let mut out2 = Array2::zeros((1, batch));
    general_mat_mul(F::one(), &head.fc3_w, &a2, F::zero(), &mut out2);
    let bias = head.fc3_b[0];
    let out = Array1::from_iter(out2.row(0).iter().map(|&v| v + bias));

    HeadForward { z1, a1, a2, out }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Architecture {
        Architecture {
            input_dim: 1,
            lstm_layers: 2,
            hidden: 8,
            head_dims: [8, 4, 1],
        }
    }

    fn wavy_path(n: usize, phase: f64) -> Vec<f64> {
        (0..n).map(|i| (i as f64 * 0.31 + phase).sin() + 0.01 * i as f64).collect()
    }

    #[test]
    fn zero_model_outputs_exactly_zero() {
        let model = LstmModel::<f64>::zeroed(tiny()).unwrap();
        let est = model.estimate(&wavy_path(40, 0.0)).unwrap();
        assert_eq!(est, 0.0);
    }

    #[test]
    fn identical_sequences_get_identical_outputs() {
        let model = LstmModel::<f32>::init(tiny(), 7).unwrap();
        let path = wavy_path(60, 1.0);
        let seq = StandardizedIncrements::new(&path).unwrap();
        let packed = pack_sequences::<f32>(&[seq.clone(), seq]).unwrap();
        let out = model.forward_packed(packed.view(), 59).unwrap();
        assert_eq!(out[0], out[1]);
    }

    #[test]
    fn estimate_many_matches_singles_and_mixed_lengths() {
        let model = LstmModel::<f32>::init(tiny(), 3).unwrap();
        let paths = vec![wavy_path(50, 0.2), wavy_path(80, 0.4), wavy_path(50, 0.9)];
        let many = model.estimate_many(&paths).unwrap();
        for (p, &m) in paths.iter().zip(&many) {
            assert_eq!(model.estimate(p).unwrap(), m);
        }
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = LstmModel::<f32>::init(tiny(), 11).unwrap();
        let b = LstmModel::<f32>::init(tiny(), 11).unwrap();
        let c = LstmModel::<f32>::init(tiny(), 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn init_decorates_forget_bias() {
        let m = LstmModel::<f64>::init(tiny(), 0).unwrap();
        let h = m.arch.hidden;
        for l in &m.layers {
            for k in 0..h {
                assert_eq!(l.bias[k], 0.0);
                assert_eq!(l.bias[h + k], 1.0);
                assert_eq!(l.bias[2 * h + k], 0.0);
                assert_eq!(l.bias[3 * h + k], 0.0);
            }
        }
        assert_eq!(m.head.prelu_slope[0], 0.25);
    }

    #[test]
    fn parameter_count_matches_slices() {
        let mut m = LstmModel::<f32>::init(Architecture::default(), 0).unwrap();
        let total: usize = m.param_slices_mut().iter().map(|s| s.len()).sum();
        assert_eq!(total, m.arch.parameter_count());
    }

    #[test]
    fn rejects_mismatched_packing() {
        let model = LstmModel::<f64>::init(tiny(), 0).unwrap();
        let packed = Array2::<f64>::zeros((1, 10));
        assert!(model.forward_packed(packed.view(), 3).is_err());
        let wide = Array2::<f64>::zeros((2, 10));
        assert!(model.forward_packed(wide.view(), 5).is_err());
    }
}
