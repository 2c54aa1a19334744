//! Non-anticipative functional input networks.
//!
//! The network maps a time point and a path to
//!
//!   φ(t_k, x) = Σ_{n} y_n ρ(a_n t_k + Σ_i ∫₀^{t_k} φ_{n,i}(s)·x_i(s) ds
//!                + c_n·x(t_k) + b_n),
//!
//! with ρ = ReLU, one small one-hidden-layer network φ_{n,i} per neuron and
//! input coordinate, and the integral discretized as the left Riemann sum
//! over grid points strictly before t_k.  Everything the prediction at t_k
//! touches lives at or before t_k, which makes the evaluation
//! non-anticipative to the bit: two paths agreeing up to t_k get identical
//! predictions there.  The optional spatial term c_n·x(t_k) is a plain
//! additive reading of the current value.
//!
//! Gradients are exact (ReLU subgradient 0 at the kink), computed by
//! backpropagation through the Riemann sums; the loss is the weighted MSE
//!
//!   (1/MK) Σ_m Σ_k ((f(t_k, x⁽ᵐ⁾) − φ(t_k, x⁽ᵐ⁾)) / ψ⁽ᵐ⁾)².

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{Adam, LossCurve, TrainConfig};
use crate::path::{PathBatch, PathView};

/// One-hidden-layer scalar network s ↦ Σ_u w_out[u]·ρ(w_in[u]·s + b_in[u]) + b_out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerNet {
    w_in: Vec<f64>,
    b_in: Vec<f64>,
    w_out: Vec<f64>,
    b_out: f64,
}

impl InnerNet {
    pub fn hidden(&self) -> usize {
        self.w_in.len()
    }

    pub fn eval(&self, s: f64) -> f64 {
        let mut acc = self.b_out;
        for u in 0..self.w_in.len() {
            let pre = self.w_in[u] * s + self.b_in[u];
            if pre > 0.0 {
                acc += self.w_out[u] * pre;
            }
        }
        acc
    }
}

/// All parameters of one functional input network.
///
/// Flat layout (used by the optimizer, gradients, and finite-difference
/// checks): time weights a, biases b, readouts y, spatial weights c (when
/// enabled, neuron-major over coordinates), then the inner networks
/// neuron-major over coordinates, each as w_in, b_in, w_out, b_out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnParams {
    neurons: usize,
    hidden: usize,
    dim: usize,
    spatial: bool,
    time_w: Vec<f64>,
    bias: Vec<f64>,
    readout: Vec<f64>,
    spatial_w: Vec<f64>,
    inner: Vec<InnerNet>,
}

impl FnnParams {
    /// Random initialization: readouts uniform in ±1/√neurons, inner output
    /// layers uniform in ±1/√hidden (fan-in scaling), everything else
    /// uniform in ±1.  Draws come from ChaCha12 keyed by `seed`, in field
    /// order.
    pub fn init(neurons: usize, hidden: usize, dim: usize, spatial: bool, seed: u64) -> Self {
        assert!(neurons > 0 && hidden > 0 && dim > 0);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut uni = |s: f64, n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.gen_range(-s..s)).collect()
        };
        let time_w = uni(1.0, neurons);
        let bias = uni(1.0, neurons);
        let readout = uni(1.0 / (neurons as f64).sqrt(), neurons);
        let spatial_w = if spatial { uni(1.0, neurons * dim) } else { Vec::new() };
        let s_out = 1.0 / (hidden as f64).sqrt();
        let inner = (0..neurons * dim)
            .map(|_| InnerNet {
                w_in: uni(1.0, hidden),
                b_in: uni(1.0, hidden),
                w_out: uni(s_out, hidden),
                b_out: uni(s_out, 1)[0],
            })
            .collect();
        FnnParams { neurons, hidden, dim, spatial, time_w, bias, readout, spatial_w, inner }
    }

    pub fn neurons(&self) -> usize {
        self.neurons
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spatial(&self) -> bool {
        self.spatial
    }

    pub fn n_params(&self) -> usize {
        3 * self.neurons
            + self.spatial_w.len()
            + self.neurons * self.dim * (3 * self.hidden + 1)
    }

    /// Extents of the parameter classes in the flat layout:
    /// (time, bias, readout, spatial, inner).
    pub fn class_ranges(&self) -> [std::ops::Range<usize>; 5] {
        let n = self.neurons;
        let sp = self.spatial_w.len();
        [
            0..n,
            n..2 * n,
            2 * n..3 * n,
            3 * n..3 * n + sp,
            3 * n + sp..self.n_params(),
        ]
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.n_params());
        flat.extend_from_slice(&self.time_w);
        flat.extend_from_slice(&self.bias);
        flat.extend_from_slice(&self.readout);
        flat.extend_from_slice(&self.spatial_w);
        for net in &self.inner {
            flat.extend_from_slice(&net.w_in);
            flat.extend_from_slice(&net.b_in);
            flat.extend_from_slice(&net.w_out);
            flat.push(net.b_out);
        }
        flat
    }

    pub fn assign_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::DimensionMismatch(format!(
                "flat vector has {} entries, expected {}",
                flat.len(),
                self.n_params()
            )));
        }
        let n = self.neurons;
        self.time_w.copy_from_slice(&flat[..n]);
        self.bias.copy_from_slice(&flat[n..2 * n]);
        self.readout.copy_from_slice(&flat[2 * n..3 * n]);
        let mut pos = 3 * n;
        let n_spatial = self.spatial_w.len();
        self.spatial_w.copy_from_slice(&flat[pos..pos + n_spatial]);
        pos += n_spatial;
        let h = self.hidden;
        for net in &mut self.inner {
            net.w_in.copy_from_slice(&flat[pos..pos + h]);
            net.b_in.copy_from_slice(&flat[pos + h..pos + 2 * h]);
            net.w_out.copy_from_slice(&flat[pos + 2 * h..pos + 3 * h]);
            net.b_out = flat[pos + 3 * h];
            pos += 3 * h + 1;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let pairs = self.neurons * self.dim;
        let ok = self.neurons > 0
            && self.hidden > 0
            && self.dim > 0
            && self.time_w.len() == self.neurons
            && self.bias.len() == self.neurons
            && self.readout.len() == self.neurons
            && self.spatial_w.len() == if self.spatial { pairs } else { 0 }
            && self.inner.len() == pairs
            && self.inner.iter().all(|net| {
                net.w_in.len() == self.hidden
                    && net.b_in.len() == self.hidden
                    && net.w_out.len() == self.hidden
            });
        if !ok {
            return Err(Error::Config("inconsistent network shape".into()));
        }
        Ok(())
    }
}

/// Paths with per-(path, grid point) targets and per-path weights ψ.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub batch: PathBatch,
    /// Row-major M×K table of target values f(t_k, x⁽ᵐ⁾).
    pub targets: Vec<f64>,
    /// ψ⁽ᵐ⁾ per path, all ≥ 1 for the exponential weights.
    pub weights: Vec<f64>,
}

impl Dataset {
    pub fn new(batch: PathBatch, targets: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let (m, k) = (batch.len(), batch.grid_len());
        if targets.len() != m * k {
            return Err(Error::DimensionMismatch(format!(
                "target table has {} entries, expected {m}×{k}",
                targets.len()
            )));
        }
        if weights.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "weight vector has {} entries, expected {m}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Domain("weights must be positive and finite".into()));
        }
        Ok(Dataset { batch, targets, weights })
    }

    pub fn n_paths(&self) -> usize {
        self.batch.len()
    }

    pub fn grid_len(&self) -> usize {
        self.batch.grid_len()
    }

    /// Weighted MSE of the zero predictor, mean of (f/ψ)².
    pub fn zero_baseline(&self) -> f64 {
        let k = self.grid_len();
        let mut acc = 0.0;
        for m in 0..self.n_paths() {
            let u2 = 1.0 / (self.weights[m] * self.weights[m]);
            for t in &self.targets[m * k..(m + 1) * k] {
                acc += t * t * u2;
            }
        }
        acc / self.targets.len() as f64
    }
}

/// Grid-dependent inner-net evaluations, recomputed once per parameter
/// change and shared by every path: values φ_{n,i}(t_j) and the hidden
/// activations needed for backprop.
struct InnerEval {
    /// (neurons·dim) × K values.
    phi: Vec<f64>,
    /// (neurons·dim) × hidden × K ReLU outputs.
    hidden_act: Vec<f64>,
}

fn eval_inner(params: &FnnParams, times: &[f64]) -> InnerEval {
    let k = times.len();
    let pairs = params.neurons * params.dim;
    let h = params.hidden;
    let mut phi = vec![0.0; pairs * k];
    let mut hidden_act = vec![0.0; pairs * h * k];
    for pair in 0..pairs {
        let net = &params.inner[pair];
        let phi_row = &mut phi[pair * k..(pair + 1) * k];
        phi_row.iter_mut().for_each(|p| *p = net.b_out);
        for u in 0..h {
            let (w, b, wo) = (net.w_in[u], net.b_in[u], net.w_out[u]);
            let act_row = &mut hidden_act[(pair * h + u) * k..(pair * h + u + 1) * k];
            for j in 0..k {
                let a = (w * times[j] + b).max(0.0);
                act_row[j] = a;
                phi_row[j] += wo * a;
            }
        }
    }
    InnerEval { phi, hidden_act }
}

/// Reused per-path buffers plus batch-level accumulators.
struct Workspace {
    z: Vec<f64>,
    out: Vec<f64>,
    delta: Vec<f64>,
    /// Batch accumulator: coefficient of φ_{n,i}(t_j) in the loss gradient.
    phi_coeff: Vec<f64>,
    grad: Vec<f64>,
}

impl Workspace {
    fn new(params: &FnnParams, k: usize) -> Self {
        Workspace {
            z: vec![0.0; params.neurons * k],
            out: vec![0.0; k],
            delta: vec![0.0; k],
            phi_coeff: vec![0.0; params.neurons * params.dim * k],
            grad: vec![0.0; params.n_params()],
        }
    }
}

/// Builds pre-activations z and predictions for one path.  The integral
/// accumulates left to right, so entry k never touches the path past t_k.
fn forward_path(params: &FnnParams, eval: &InnerEval, path: PathView<'_>, ws: &mut Workspace) {
    let k = path.len();
    let (n, d) = (params.neurons, params.dim);
    ws.out[..k].iter_mut().for_each(|o| *o = 0.0);
    for nn in 0..n {
        let (a, b, y) = (params.time_w[nn], params.bias[nn], params.readout[nn]);
        let zrow = &mut ws.z[nn * k..(nn + 1) * k];
        for j in 0..k {
            let mut z = a * path.times[j] + b;
            if params.spatial {
                let x = path.value(j);
                for i in 0..d {
                    z += params.spatial_w[nn * d + i] * x[i];
                }
            }
            zrow[j] = z;
        }
        for i in 0..d {
            let phi_row = &eval.phi[(nn * d + i) * k..(nn * d + i + 1) * k];
            let mut integral = 0.0;
            for j in 0..k {
                zrow[j] += integral;
                if j + 1 < k {
                    let width = path.times[j + 1] - path.times[j];
                    integral += width * phi_row[j] * path.value(j)[i];
                }
            }
        }
        for j in 0..k {
            if zrow[j] > 0.0 {
                ws.out[j] += y * zrow[j];
            }
        }
    }
}

/// Predictions φ(t_k, x) at every grid point of one path.
pub fn fnn_forward(params: &FnnParams, path: PathView<'_>) -> Result<Vec<f64>> {
    params.validate()?;
    if path.dim != params.dim {
        return Err(Error::DimensionMismatch(format!(
            "network expects dimension {}, path has {}",
            params.dim, path.dim
        )));
    }
    let eval = eval_inner(params, path.times);
    let mut ws = Workspace::new(params, path.len());
    forward_path(params, &eval, path, &mut ws);
    Ok(ws.out)
}

fn check_dataset(params: &FnnParams, data: &Dataset) -> Result<()> {
    params.validate()?;
    if data.batch.dim() != params.dim {
        return Err(Error::DimensionMismatch(format!(
            "network expects dimension {}, batch has {}",
            params.dim,
            data.batch.dim()
        )));
    }
    Ok(())
}

/// Weighted MSE over a dataset.
pub fn weighted_mse(params: &FnnParams, data: &Dataset) -> Result<f64> {
    check_dataset(params, data)?;
    let eval = eval_inner(params, data.batch.times());
    let mut ws = Workspace::new(params, data.grid_len());
    Ok(loss_over(params, &eval, data, &(0..data.n_paths()).collect::<Vec<_>>(), &mut ws))
}

fn loss_over(
    params: &FnnParams,
    eval: &InnerEval,
    data: &Dataset,
    indices: &[usize],
    ws: &mut Workspace,
) -> f64 {
    let k = data.grid_len();
    let mut acc = 0.0;
    for &m in indices {
        forward_path(params, eval, data.batch.path(m), ws);
        let u2 = 1.0 / (data.weights[m] * data.weights[m]);
        let targets = &data.targets[m * k..(m + 1) * k];
        for j in 0..k {
            let r = targets[j] - ws.out[j];
            acc += r * r * u2;
        }
    }
    acc / (indices.len() * k) as f64
}

/// Backward pass for one path; returns its summed squared weighted residual.
/// Gradients accumulate into `ws.grad` except the inner-net part, which is
/// deferred: only the coefficients of φ_{n,i}(t_j) accumulate (into
/// `ws.phi_coeff`), and `inner_backward` expands them once per batch.
fn backward_path(
    params: &FnnParams,
    eval: &InnerEval,
    path: PathView<'_>,
    targets: &[f64],
    weight: f64,
    inv_rows: f64,
    ws: &mut Workspace,
) -> f64 {
    let k = path.len();
    let (n, d) = (params.neurons, params.dim);
    forward_path(params, eval, path, ws);
    let u2 = 1.0 / (weight * weight);
    let mut sq = 0.0;
    // dout_j = ∂loss/∂φ(t_j) = −2·(f − φ)·u²/rows
    for j in 0..k {
        let r = targets[j] - ws.out[j];
        sq += r * r * u2;
        ws.out[j] = -2.0 * r * u2 * inv_rows;
    }
    let dout = &ws.out;
    for nn in 0..n {
        let y = params.readout[nn];
        let zrow = &ws.z[nn * k..(nn + 1) * k];
        let mut gy = 0.0;
        let mut ga = 0.0;
        let mut gb = 0.0;
        for j in 0..k {
            let z = zrow[j];
            if z > 0.0 {
                gy += dout[j] * z;
                let delta = dout[j] * y;
                ws.delta[j] = delta;
                ga += delta * path.times[j];
                gb += delta;
            } else {
                ws.delta[j] = 0.0;
            }
        }
        ws.grad[nn] += ga;
        ws.grad[n + nn] += gb;
        ws.grad[2 * n + nn] += gy;
        if params.spatial {
            for i in 0..d {
                let mut gc = 0.0;
                for j in 0..k {
                    gc += ws.delta[j] * path.value(j)[i];
                }
                ws.grad[3 * n + nn * d + i] += gc;
            }
        }
        // reverse cumulative sums turn δ into the coefficient of φ(t_j)
        let mut tail = 0.0;
        for j in (0..k - 1).rev() {
            tail += ws.delta[j + 1];
            if tail != 0.0 {
                let width = path.times[j + 1] - path.times[j];
                let x = path.value(j);
                for i in 0..d {
                    ws.phi_coeff[(nn * d + i) * k + j] += width * x[i] * tail;
                }
            }
        }
    }
    sq
}

/// Expands the deferred φ-coefficients into inner-net parameter gradients.
fn inner_backward(params: &FnnParams, eval: &InnerEval, times: &[f64], ws: &mut Workspace) {
    let k = times.len();
    let h = params.hidden;
    let pairs = params.neurons * params.dim;
    let base = 3 * params.neurons + params.spatial_w.len();
    for pair in 0..pairs {
        let coeff = &ws.phi_coeff[pair * k..(pair + 1) * k];
        let net = &params.inner[pair];
        let gbase = base + pair * (3 * h + 1);
        for u in 0..h {
            let act = &eval.hidden_act[(pair * h + u) * k..(pair * h + u + 1) * k];
            let wo = net.w_out[u];
            let (mut gw_in, mut gb_in, mut gw_out) = (0.0, 0.0, 0.0);
            for j in 0..k {
                let c = coeff[j];
                if c == 0.0 {
                    continue;
                }
                let a = act[j];
                gw_out += c * a;
                if a > 0.0 {
                    let gpre = c * wo;
                    gw_in += gpre * times[j];
                    gb_in += gpre;
                }
            }
            ws.grad[gbase + u] += gw_in;
            ws.grad[gbase + h + u] += gb_in;
            ws.grad[gbase + 2 * h + u] += gw_out;
        }
        ws.grad[gbase + 3 * h] += coeff.iter().sum::<f64>();
    }
}

fn grad_over(
    params: &FnnParams,
    eval: &InnerEval,
    data: &Dataset,
    indices: &[usize],
    ws: &mut Workspace,
) -> f64 {
    let k = data.grid_len();
    ws.grad.iter_mut().for_each(|g| *g = 0.0);
    ws.phi_coeff.iter_mut().for_each(|c| *c = 0.0);
    let rows = (indices.len() * k) as f64;
    let mut sq = 0.0;
    for &m in indices {
        sq += backward_path(
            params,
            eval,
            data.batch.path(m),
            &data.targets[m * k..(m + 1) * k],
            data.weights[m],
            1.0 / rows,
            ws,
        );
    }
    inner_backward(params, eval, data.batch.times(), ws);
    sq / rows
}

/// Loss and exact gradient (flat layout) over a whole dataset.
pub fn fnn_grad(params: &FnnParams, data: &Dataset) -> Result<(f64, Vec<f64>)> {
    check_dataset(params, data)?;
    let eval = eval_inner(params, data.batch.times());
    let mut ws = Workspace::new(params, data.grid_len());
    let indices: Vec<usize> = (0..data.n_paths()).collect();
    let loss = grad_over(params, &eval, data, &indices, &mut ws);
    Ok((loss, ws.grad.clone()))
}

/// Adam training with path-level minibatches.
///
/// Each epoch shuffles the path indices (ChaCha12 keyed by `cfg.seed`) and
/// visits them in `cfg.batch_size` groups; all K grid points of a chosen
/// path enter the minibatch loss together.  The recorded per-epoch training
/// loss is the average of the minibatch losses as they are visited; the
/// test loss is evaluated every `cfg.test_every` epochs and at the end.
pub fn train_fnn(
    init: FnnParams,
    cfg: &TrainConfig,
    train: &Dataset,
    test: Option<&Dataset>,
) -> Result<(FnnParams, LossCurve)> {
    cfg.validate()?;
    check_dataset(&init, train)?;
    if let Some(t) = test {
        check_dataset(&init, t)?;
    }
    let mut params = init;
    let k = train.grid_len();
    let mut flat = params.to_flat();
    let mut adam = Adam::new(cfg.lr, flat.len());
    let mut ws = Workspace::new(&params, k);
    let mut curve = LossCurve::default();
    let mut indices: Vec<usize> = (0..train.n_paths()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    for epoch in 1..=cfg.epochs {
        indices.shuffle(&mut rng);
        let mut epoch_sq = 0.0;
        for chunk in indices.chunks(cfg.batch_size) {
            let eval = eval_inner(&params, train.batch.times());
            let batch_loss = grad_over(&params, &eval, train, chunk, &mut ws);
            epoch_sq += batch_loss * (chunk.len() * k) as f64;
            adam.step(&mut flat, &ws.grad);
            params.assign_from_flat(&flat)?;
        }
        curve.train.push(epoch_sq / (train.n_paths() * k) as f64);
        if let Some(tdata) = test {
            if epoch % cfg.test_every == 0 || epoch == cfg.epochs {
                let eval = eval_inner(&params, tdata.batch.times());
                let mut tws = Workspace::new(&params, tdata.grid_len());
                let all: Vec<usize> = (0..tdata.n_paths()).collect();
                curve.test.push((epoch, loss_over(&params, &eval, tdata, &all, &mut tws)));
            }
        }
    }
    if !flat.iter().all(|p| p.is_finite()) {
        return Err(Error::Numeric("training diverged to non-finite parameters".into()));
    }
    Ok((params, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::sample_bm;

    fn toy_dataset(n_paths: usize, k: usize, seed: u64) -> Dataset {
        let batch = sample_bm(n_paths, k, 1.0, seed).unwrap();
        let mut targets = Vec::with_capacity(n_paths * k);
        for m in 0..n_paths {
            let view = batch.path(m);
            let mut running = f64::NEG_INFINITY;
            for j in 0..k {
                running = running.max(view.value(j)[0]);
                targets.push(running);
            }
        }
        let weights = vec![1.25; n_paths];
        Dataset::new(batch, targets, weights).unwrap()
    }

    #[test]
    fn init_is_reproducible_and_in_range() {
        let a = FnnParams::init(8, 5, 1, true, 3);
        let b = FnnParams::init(8, 5, 1, true, 3);
        assert_eq!(a, b);
        let bound = 1.0 / 8f64.sqrt();
        assert!(a.readout.iter().all(|y| y.abs() < bound));
        assert!(a.time_w.iter().all(|v| v.abs() < 1.0));
        assert!(a.inner[0].w_out.iter().all(|v| v.abs() < 1.0 / 5f64.sqrt()));
        assert_ne!(a, FnnParams::init(8, 5, 1, true, 4));
    }

    #[test]
    fn flat_round_trip() {
        let p = FnnParams::init(4, 3, 2, true, 9);
        let flat = p.to_flat();
        assert_eq!(flat.len(), p.n_params());
        let mut q = FnnParams::init(4, 3, 2, true, 10);
        q.assign_from_flat(&flat).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn prediction_at_time_zero_has_empty_integral() {
        let p = FnnParams::init(6, 4, 1, true, 1);
        let batch = sample_bm(1, 10, 1.0, 2).unwrap();
        let path = batch.path(0);
        let preds = fnn_forward(&p, path).unwrap();
        // by hand: z_n(0) = b_n + c_n·x(0), output Σ y_n ρ(z_n)
        let x0 = path.value(0)[0];
        let mut want = 0.0;
        for n in 0..6 {
            let z = p.bias[n] + p.spatial_w[n] * x0;
            if z > 0.0 {
                want += p.readout[n] * z;
            }
        }
        assert_eq!(preds[0], want);
    }

    #[test]
    fn zero_readout_blocks_all_gradients_but_its_own() {
        let mut p = FnnParams::init(5, 4, 1, true, 7);
        p.readout.iter_mut().for_each(|y| *y = 0.0);
        let data = toy_dataset(3, 12, 5);
        let (_, grad) = fnn_grad(&p, &data).unwrap();
        let [time, bias, readout, spatial, inner] = p.class_ranges();
        assert!(grad[time].iter().all(|g| *g == 0.0));
        assert!(grad[bias].iter().all(|g| *g == 0.0));
        assert!(grad[spatial].iter().all(|g| *g == 0.0));
        assert!(grad[inner].iter().all(|g| *g == 0.0));
        assert!(grad[readout].iter().any(|g| *g != 0.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let p = FnnParams::init(3, 4, 1, true, 11);
        let data = toy_dataset(4, 9, 21);
        let (_, grad) = fnn_grad(&p, &data).unwrap();
        let flat = p.to_flat();
        let h = 1e-5;
        // probe a spread of parameters across every class
        let [time, bias, readout, spatial, inner] = p.class_ranges();
        let mut picks = vec![time.start, bias.start + 1, readout.start + 2, spatial.start];
        picks.extend([inner.start, inner.start + 5, inner.start + 9, inner.end - 1]);
        for idx in picks {
            let mut plus = p.clone();
            let mut minus = p.clone();
            let mut fp = flat.clone();
            let mut fm = flat.clone();
            fp[idx] += h;
            fm[idx] -= h;
            plus.assign_from_flat(&fp).unwrap();
            minus.assign_from_flat(&fm).unwrap();
            let lp = weighted_mse(&plus, &data).unwrap();
            let lm = weighted_mse(&minus, &data).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let scale = fd.abs().max(grad[idx].abs()).max(1e-8);
            assert!(
                (fd - grad[idx]).abs() / scale <= 1e-5,
                "param {idx}: fd {fd} vs grad {}",
                grad[idx]
            );
        }
    }

    #[test]
    fn predictions_are_non_anticipative_to_the_bit() {
        let p = FnnParams::init(7, 6, 1, true, 13);
        let base = sample_bm(2, 20, 1.0, 31).unwrap();
        let (a, b) = (base.path(0), base.path(1));
        for cut in [0usize, 5, 13, 19] {
            // splice: agree with `a` through `cut`, follow `b`'s increments after
            let mut values = a.values[..=cut].to_vec();
            let mut last = values[cut];
            for j in cut + 1..20 {
                last += b.values[j] - b.values[j - 1];
                values.push(last);
            }
            let spliced = crate::path::DiscretePath::new(a.times.to_vec(), values, 1).unwrap();
            let pa = fnn_forward(&p, a).unwrap();
            let pb = fnn_forward(&p, spliced.view()).unwrap();
            for j in 0..=cut {
                assert!(
                    pa[j] == pb[j],
                    "cut {cut}, grid {j}: {} vs {} differ in bits",
                    pa[j],
                    pb[j]
                );
            }
        }
    }

    #[test]
    fn neuron_permutation_leaves_predictions_unchanged() {
        let p = FnnParams::init(5, 4, 1, true, 17);
        let mut q = p.clone();
        let perm = [3usize, 0, 4, 1, 2];
        for (to, &from) in perm.iter().enumerate() {
            q.time_w[to] = p.time_w[from];
            q.bias[to] = p.bias[from];
            q.readout[to] = p.readout[from];
            q.spatial_w[to] = p.spatial_w[from];
            q.inner[to] = p.inner[from].clone();
        }
        let batch = sample_bm(1, 15, 1.0, 19).unwrap();
        let pa = fnn_forward(&p, batch.path(0)).unwrap();
        let pb = fnn_forward(&q, batch.path(0)).unwrap();
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn doubling_weights_quarters_loss_and_gradient() {
        let p = FnnParams::init(4, 3, 1, false, 23);
        let data = toy_dataset(3, 8, 41);
        let mut scaled = data.clone();
        scaled.weights.iter_mut().for_each(|w| *w *= 2.0);
        let (l1, g1) = fnn_grad(&p, &data).unwrap();
        let (l2, g2) = fnn_grad(&p, &scaled).unwrap();
        assert_eq!(l2, l1 / 4.0);
        for (a, b) in g1.iter().zip(&g2) {
            assert_eq!(*b, a / 4.0);
        }
    }

    #[test]
    fn training_with_zero_lr_or_zero_epochs_is_identity() {
        let p = FnnParams::init(4, 3, 1, false, 29);
        let data = toy_dataset(4, 8, 43);
        let cfg = TrainConfig { lr: 0.0, batch_size: 2, epochs: 3, test_every: 1, seed: 0 };
        let (trained, curve) = train_fnn(p.clone(), &cfg, &data, None).unwrap();
        assert_eq!(trained, p);
        assert!(curve.train.windows(2).all(|w| w[0] == w[1]));
        let cfg0 = TrainConfig { epochs: 0, ..cfg };
        let (same, curve0) = train_fnn(p.clone(), &cfg0, &data, None).unwrap();
        assert_eq!(same, p);
        assert!(curve0.train.is_empty());
    }

    #[test]
    fn training_reduces_loss_on_a_small_problem() {
        let p = FnnParams::init(10, 8, 1, true, 37);
        let data = toy_dataset(30, 12, 47);
        let before = weighted_mse(&p, &data).unwrap();
        let cfg = TrainConfig { lr: 3e-3, batch_size: 10, epochs: 120, test_every: 40, seed: 1 };
        let (trained, curve) = train_fnn(p, &cfg, &data, Some(&data)).unwrap();
        let after = weighted_mse(&trained, &data).unwrap();
        assert!(
            after < 0.5 * before,
            "loss only moved from {before} to {after}"
        );
        assert_eq!(curve.train.len(), 120);
        assert_eq!(curve.test.len(), 3);
        assert_eq!(curve.test.last().unwrap().0, 120);
    }

    #[test]
    fn dataset_shape_validation() {
        let batch = sample_bm(2, 5, 1.0, 1).unwrap();
        assert!(Dataset::new(batch.clone(), vec![0.0; 9], vec![1.0; 2]).is_err());
        assert!(Dataset::new(batch.clone(), vec![0.0; 10], vec![1.0; 3]).is_err());
        assert!(Dataset::new(batch.clone(), vec![0.0; 10], vec![0.0; 2]).is_err());
        assert!(Dataset::new(batch, vec![0.0; 10], vec![1.0; 2]).is_ok());
    }
}
