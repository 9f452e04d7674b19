//! Reverse-mode gradients through the recurrence and the head.
//!
//! The training forward pass trades memory for speed: per layer it first
//! projects every step's input in one matrix product, then walks the
//! sequence adding the recurrent term step by step, keeping the
//! post-activation gates, hidden states, cell states, and tanh(cell) for
//! the backward sweep. The backward pass mirrors that shape. Per step it
//! only needs the small recurrent product; the three large gradient
//! products (input weights, recurrent weights, input gradient) each
//! collapse into a single call over the whole sequence:
//!
//! ```text
//! dW = dZ . X^T        dU = dZ[:, B..] . H[:, ..(T-1)B]^T        dX = W^T . dZ
//! ```
//!
//! because z_t depends on h_{t-1}, so the gate-gradient block at step t
//! pairs with the hidden block at step t-1, which is a plain column shift
//! in the packed layout.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};

use super::model::{head_forward, sigmoid, HeadForward, LstmModel, Scalar};
use super::train::LossKind;
use crate::error::{Error, Result};

/// Gradients of every parameter tensor, shaped like the model and
/// iterated in the same canonical order.
#[derive(Debug, Clone)]
pub struct Gradients<F> {
    pub layers: Vec<LayerGrads<F>>,
    pub head: HeadGrads<F>,
}

#[derive(Debug, Clone)]
pub struct LayerGrads<F> {
    pub w_input: Array2<F>,
    pub w_recurrent: Array2<F>,
    pub bias: Array1<F>,
}

#[derive(Debug, Clone)]
pub struct HeadGrads<F> {
    pub fc1_w: Array2<F>,
    pub fc1_b: Array1<F>,
    pub prelu_slope: Array1<F>,
    pub fc2_w: Array2<F>,
    pub fc2_b: Array1<F>,
    pub fc3_w: Array2<F>,
    pub fc3_b: Array1<F>,
}

impl<F: Scalar> Gradients<F> {
    /// Flat views in the model's canonical parameter order, aligned
    /// slot for slot with `LstmModel::param_slices`.
    pub fn slices(&self) -> Vec<&[F]> {
        let mut out = Vec::with_capacity(3 * self.layers.len() + 7);
        for l in self.layers.iter() {
            out.push(l.w_input.as_slice().expect("owned"));
            out.push(l.w_recurrent.as_slice().expect("owned"));
            out.push(l.bias.as_slice().expect("owned"));
        }
        out.push(self.head.fc1_w.as_slice().expect("owned"));
        out.push(self.head.fc1_b.as_slice().expect("owned"));
        out.push(self.head.prelu_slope.as_slice().expect("owned"));
        out.push(self.head.fc2_w.as_slice().expect("owned"));
        out.push(self.head.fc2_b.as_slice().expect("owned"));
        out.push(self.head.fc3_w.as_slice().expect("owned"));
        out.push(self.head.fc3_b.as_slice().expect("owned"));
        out
    }
}

/// Step-major caches of one LSTM layer. `gates` holds post-activation
/// values [input, forget, candidate, output]; `cells` is one block longer
/// than the sequence because it starts at the zero initial state.
struct LayerCache<F> {
    gates: Array2<F>,
    hidden: Array2<F>,
    cells: Array2<F>,
    tanh_cells: Array2<F>,
}

/// Loss and parameter gradients for one packed batch.
///
/// `inputs` is the `(input_dim, steps * batch)` step-major packing,
/// `targets` one label per sequence. The loss is the batch mean, so
/// gradients are batch means too.
pub fn loss_and_gradients<F: Scalar>(
    model: &LstmModel<F>,
    inputs: ArrayView2<F>,
    steps: usize,
    targets: &[f64],
    loss: LossKind,
) -> Result<(f64, Gradients<F>)> {
    let h = model.arch.hidden;
    let (rows, cols) = inputs.dim();
    if rows != model.arch.input_dim || steps == 0 || cols != steps * targets.len() {
        return Err(Error::InvalidParameter(format!(
            "packed input {rows}x{cols} does not match {steps} steps x {} targets",
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::EmptyInput);
    }
    let batch = targets.len();

    // forward with caches
    let mut caches: Vec<LayerCache<F>> = Vec::with_capacity(model.layers.len());
    for (l, layer) in model.layers.iter().enumerate() {
        let x_all = if l == 0 { inputs.view() } else { caches[l - 1].hidden.view() };
        caches.push(layer_forward(layer, x_all, steps, batch, h));
    }

    let top = &caches[caches.len() - 1].hidden;
    let mut pooled = Array2::<F>::zeros((h, batch));
    for t in 0..steps {
        pooled += &top.slice(s![.., t * batch..(t + 1) * batch]);
    }
    let inv_steps = F::one() / F::from_f64(steps as f64);
    pooled.mapv_inplace(|v| v * inv_steps);

    let hf = head_forward(&model.head, &pooled);

    // loss and its gradient in the predictions
    let mut loss_sum = 0.0;
    let mut dpred = Array2::<F>::zeros((1, batch));
    let inv_batch = 1.0 / batch as f64;
    for (b, &target) in targets.iter().enumerate() {
        let r = hf.out[b].as_f64() - target;
        match loss {
            LossKind::Mse => {
                loss_sum += r * r;
                dpred[(0, b)] = F::from_f64(2.0 * r * inv_batch);
            }
            LossKind::Mae => {
                loss_sum += r.abs();
                dpred[(0, b)] = F::from_f64(r.signum() * inv_batch);
            }
        }
    }
    let loss_value = loss_sum * inv_batch;
    if !loss_value.is_finite() {
        return Err(Error::NonFinite("training loss is not finite".into()));
    }

    // head backward
    let (head_grads, dpooled) = head_backward(model, &hf, &pooled, &dpred);

    // LSTM backward, top layer first; dx_above carries the gradient a
    // layer hands to the one below it
    let mut layer_grads: Vec<LayerGrads<F>> = Vec::with_capacity(model.layers.len());
    let dpooled_step = dpooled.mapv(|v| v * inv_steps);
    let mut dx_above: Option<Array2<F>> = None;
    for l in (0..model.layers.len()).rev() {
        let x_all = if l == 0 { inputs.view() } else { caches[l - 1].hidden.view() };
        let (grads, dx) = layer_backward(
            &model.layers[l],
            &caches[l],
            x_all,
            steps,
            batch,
            h,
            dx_above.as_ref(),
            if l == model.layers.len() - 1 {
                Some(&dpooled_step)
            } else {
                None
            },
            l > 0,
        );
        layer_grads.push(grads);
        dx_above = dx;
    }
    layer_grads.reverse();

    let grads = Gradients {
        layers: layer_grads,
        head: head_grads,
    };
    for slice in grads.slices() {
        if slice.iter().any(|v| !v.as_f64().is_finite()) {
            return Err(Error::NonFinite("gradient is not finite".into()));
        }
    }
    Ok((loss_value, grads))
}

fn layer_forward<F: Scalar>(
    layer: &super::model::LstmLayer<F>,
    x_all: ArrayView2<F>,
    steps: usize,
    batch: usize,
    h: usize,
) -> LayerCache<F> {
    let mut gates = Array2::<F>::zeros((4 * h, steps * batch));
    general_mat_mul(F::one(), &layer.w_input, &x_all, F::zero(), &mut gates);
    for (r, mut row) in gates.rows_mut().into_iter().enumerate() {
        row += layer.bias[r];
    }

    let mut hidden = Array2::<F>::zeros((h, steps * batch));
    let mut cells = Array2::<F>::zeros((h, (steps + 1) * batch));
    let mut tanh_cells = Array2::<F>::zeros((h, steps * batch));

    for t in 0..steps {
        let cols = t * batch..(t + 1) * batch;
        if t > 0 {
            let hprev = hidden.slice(s![.., (t - 1) * batch..t * batch]);
            let mut zt = gates.slice_mut(s![.., cols.clone()]);
            general_mat_mul(F::one(), &layer.w_recurrent, &hprev, F::one(), &mut zt);
        }
        let (mut zi, mut zf, mut zg, mut zo) = gates.multi_slice_mut((
            s![0..h, cols.clone()],
            s![h..2 * h, cols.clone()],
            s![2 * h..3 * h, cols.clone()],
            s![3 * h..4 * h, cols.clone()],
        ));
        zi.mapv_inplace(sigmoid);
        zf.mapv_inplace(sigmoid);
        zg.mapv_inplace(|v| v.tanh());
        zo.mapv_inplace(sigmoid);

        let (cprev, mut ccur) = cells.multi_slice_mut((
            s![.., t * batch..(t + 1) * batch],
            s![.., (t + 1) * batch..(t + 2) * batch],
        ));
        Zip::from(&mut ccur)
            .and(&cprev)
            .and(&zf)
            .and(&zi)
            .and(&zg)
            .for_each(|c, &cp, &f, &i, &g| *c = f * cp + i * g);

        let mut tct = tanh_cells.slice_mut(s![.., cols.clone()]);
        Zip::from(&mut tct).and(&ccur).for_each(|t, &c| *t = c.tanh());

        let mut ht = hidden.slice_mut(s![.., cols]);
        Zip::from(&mut ht)
            .and(&zo)
            .and(&tct)
            .for_each(|hv, &o, &tc| *hv = o * tc);
    }

    LayerCache {
        gates,
        hidden,
        cells,
        tanh_cells,
    }
}

fn head_backward<F: Scalar>(
    model: &LstmModel<F>,
    hf: &HeadForward<F>,
    pooled: &Array2<F>,
    dpred: &Array2<F>,
) -> (HeadGrads<F>, Array2<F>) {
    let head = &model.head;
    let batch = pooled.ncols();
    let slope = head.prelu_slope[0];

    let mut fc3_w = Array2::<F>::zeros(head.fc3_w.dim());
    general_mat_mul(F::one(), dpred, &hf.a2.t(), F::zero(), &mut fc3_w);
    let fc3_b = dpred.sum_axis(Axis(1));

    let mut da2 = Array2::<F>::zeros((head.fc2_w.nrows(), batch));
    general_mat_mul(F::one(), &head.fc3_w.t(), dpred, F::zero(), &mut da2);

    let mut fc2_w = Array2::<F>::zeros(head.fc2_w.dim());
    general_mat_mul(F::one(), &da2, &hf.a1.t(), F::zero(), &mut fc2_w);
    let fc2_b = da2.sum_axis(Axis(1));

    let mut da1 = Array2::<F>::zeros((head.fc1_w.nrows(), batch));
    general_mat_mul(F::one(), &head.fc2_w.t(), &da2, F::zero(), &mut da1);

    // PReLU: pass-through gradient above zero, slope times it below;
    // the slope collects gradient only from the negative branch
    let mut dslope = F::zero();
    let mut dz1 = Array2::<F>::zeros(da1.dim());
    Zip::from(&mut dz1)
        .and(&da1)
        .and(&hf.z1)
        .for_each(|d, &da, &z| {
            if z > F::zero() {
                *d = da;
            } else {
                *d = da * slope;
                dslope += da * z;
            }
        });

    let mut fc1_w = Array2::<F>::zeros(head.fc1_w.dim());
    general_mat_mul(F::one(), &dz1, &pooled.t(), F::zero(), &mut fc1_w);
    let fc1_b = dz1.sum_axis(Axis(1));

    let mut dpooled = Array2::<F>::zeros(pooled.dim());
    general_mat_mul(F::one(), &head.fc1_w.t(), &dz1, F::zero(), &mut dpooled);

    (
        HeadGrads {
            fc1_w,
            fc1_b,
            prelu_slope: Array1::from_elem(1, dslope),
            fc2_w,
            fc2_b,
            fc3_w,
            fc3_b,
        },
        dpooled,
    )
}

#[allow(clippy::too_many_arguments)]
fn layer_backward<F: Scalar>(
    layer: &super::model::LstmLayer<F>,
    cache: &LayerCache<F>,
    x_all: ArrayView2<F>,
    steps: usize,
    batch: usize,
    h: usize,
    dx_above: Option<&Array2<F>>,
    dpooled_step: Option<&Array2<F>>,
    want_dx: bool,
) -> (LayerGrads<F>, Option<Array2<F>>) {
    let mut dz_all = Array2::<F>::zeros((4 * h, steps * batch));
    let mut dh = Array2::<F>::zeros((h, batch));
    let mut dc = Array2::<F>::zeros((h, batch));

    for t in (0..steps).rev() {
        let cols = t * batch..(t + 1) * batch;
        if let Some(dp) = dpooled_step {
            dh += dp;
        }
        if let Some(dx) = dx_above {
            dh += &dx.slice(s![.., cols.clone()]);
        }

        let gi = cache.gates.slice(s![0..h, cols.clone()]);
        let gf = cache.gates.slice(s![h..2 * h, cols.clone()]);
        let gg = cache.gates.slice(s![2 * h..3 * h, cols.clone()]);
        let go = cache.gates.slice(s![3 * h..4 * h, cols.clone()]);
        let tct = cache.tanh_cells.slice(s![.., cols.clone()]);
        let cprev = cache.cells.slice(s![.., cols.clone()]);

        let (mut dzi, mut dzf, mut dzg, mut dzo) = dz_all.multi_slice_mut((
            s![0..h, cols.clone()],
            s![h..2 * h, cols.clone()],
            s![2 * h..3 * h, cols.clone()],
            s![3 * h..4 * h, cols.clone()],
        ));

        // dh reaches the cell through o*tanh(c): output gate directly,
        // cell state through the tanh derivative
        Zip::from(&mut dzo)
            .and(&dh)
            .and(&tct)
            .and(&go)
            .for_each(|d, &dhv, &tc, &o| *d = dhv * tc * o * (F::one() - o));
        Zip::from(&mut dc)
            .and(&dh)
            .and(&go)
            .and(&tct)
            .for_each(|d, &dhv, &o, &tc| *d += dhv * o * (F::one() - tc * tc));

        Zip::from(&mut dzi)
            .and(&dc)
            .and(&gg)
            .and(&gi)
            .for_each(|d, &dcv, &g, &i| *d = dcv * g * i * (F::one() - i));
        Zip::from(&mut dzg)
            .and(&dc)
            .and(&gi)
            .and(&gg)
            .for_each(|d, &dcv, &i, &g| *d = dcv * i * (F::one() - g * g));
        Zip::from(&mut dzf)
            .and(&dc)
            .and(&cprev)
            .and(&gf)
            .for_each(|d, &dcv, &cp, &f| *d = dcv * cp * f * (F::one() - f));

        // what flows to step t-1: dc through the forget gate, dh through
        // the recurrent matrix
        Zip::from(&mut dc).and(&gf).for_each(|d, &f| *d = *d * f);
        if t > 0 {
            let dzt = dz_all.slice(s![.., cols]);
            general_mat_mul(F::one(), &layer.w_recurrent.t(), &dzt, F::zero(), &mut dh);
        }
    }

    let mut w_input = Array2::<F>::zeros(layer.w_input.dim());
    general_mat_mul(F::one(), &dz_all, &x_all.t(), F::zero(), &mut w_input);

    let mut w_recurrent = Array2::<F>::zeros(layer.w_recurrent.dim());
    if steps > 1 {
        let dz_tail = dz_all.slice(s![.., batch..]);
        let h_head = cache.hidden.slice(s![.., ..(steps - 1) * batch]);
        general_mat_mul(F::one(), &dz_tail, &h_head.t(), F::zero(), &mut w_recurrent);
    }
    let bias = dz_all.sum_axis(Axis(1));

    let dx = if want_dx {
        let mut dx = Array2::<F>::zeros((layer.w_input.ncols(), steps * batch));
        general_mat_mul(F::one(), &layer.w_input.t(), &dz_all, F::zero(), &mut dx);
        Some(dx)
    } else {
        None
    };

    (
        LayerGrads {
            w_input,
            w_recurrent,
            bias,
        },
        dx,
    )
}
