//! Linear regression on truncated signature features.
//!
//! A non-anticipative linear functional of a path is a fixed linear
//! combination of time-augmented signature coordinates, evaluated at each
//! grid point on the signature of the path restricted to [0, t_k]:
//!
//!   φ(t_k, x) = Σ_I a_I ⟨e_I, S(x̂)|_{[0,t_k]}⟩.
//!
//! [`sig_features`] tabulates those coordinates as a dense row-major matrix
//! with one row per (path, grid point), so fitting is ordinary weighted
//! least squares.  Two fitters are provided: minibatch Adam on the weighted
//! MSE ([`fit_sig_sgd`], paths enter batches whole) and a closed-form ridge
//! solve of the normal equations ([`fit_sig_ridge`]).

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{Adam, LossCurve, TrainConfig};
use crate::signature::SignatureStream;
use crate::tensor::coeff_count;

/// Dense feature table: one row of signature coordinates per
/// (path, grid point), in path-major order, with the per-path reciprocal
/// weight 1/ψ attached to every row of that path.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    n_paths: usize,
    grid_len: usize,
    dim: usize,
    level: usize,
    n_cols: usize,
    data: Vec<f64>,
    row_weight: Vec<f64>,
}

impl FeatureMatrix {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    /// Tensor dimension of the features (path dimension plus the time letter).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_paths * self.grid_len
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn row_weight(&self, r: usize) -> f64 {
        self.row_weight[r]
    }

    /// Copies the row blocks of the chosen paths, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<FeatureMatrix> {
        let k = self.grid_len;
        let mut data = Vec::with_capacity(indices.len() * k * self.n_cols);
        let mut row_weight = Vec::with_capacity(indices.len() * k);
        for &m in indices {
            if m >= self.n_paths {
                return Err(Error::Domain(format!(
                    "path index {m} out of range for {} paths",
                    self.n_paths
                )));
            }
            let rows = m * k..(m + 1) * k;
            data.extend_from_slice(&self.data[rows.start * self.n_cols..rows.end * self.n_cols]);
            row_weight.extend_from_slice(&self.row_weight[rows]);
        }
        Ok(FeatureMatrix {
            n_paths: indices.len(),
            grid_len: k,
            dim: self.dim,
            level: self.level,
            n_cols: self.n_cols,
            data,
            row_weight,
        })
    }
}

impl FeatureMatrix {
    /// One feature row per tensor (a grid of length 1 per path), for
    /// regression or kernels on terminal signatures alone.
    pub fn from_tensors(
        tensors: &[&crate::tensor::TruncatedTensor],
        level: usize,
        weights: Option<&[f64]>,
    ) -> Result<FeatureMatrix> {
        let first = tensors
            .first()
            .ok_or_else(|| Error::Domain("no tensors given".into()))?;
        let dim = first.dim();
        if let Some(w) = weights {
            if w.len() != tensors.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} weights for {} tensors",
                    w.len(),
                    tensors.len()
                )));
            }
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Domain("weights must be positive and finite".into()));
            }
        }
        let n_cols = coeff_count(dim, level);
        let mut data = Vec::with_capacity(tensors.len() * n_cols);
        let mut row_weight = Vec::with_capacity(tensors.len());
        for (m, t) in tensors.iter().enumerate() {
            if t.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "tensor {m} has dimension {}, tensor 0 has {dim}",
                    t.dim()
                )));
            }
            if t.level() < level {
                return Err(Error::Domain(format!(
                    "tensor {m} has level {}, features need {level}",
                    t.level()
                )));
            }
            data.extend_from_slice(&t.coeffs()[..n_cols]);
            row_weight.push(weights.map_or(1.0, |w| 1.0 / w[m]));
        }
        Ok(FeatureMatrix {
            n_paths: tensors.len(),
            grid_len: 1,
            dim,
            level,
            n_cols,
            data,
            row_weight,
        })
    }
}

/// Tabulates the first `coeff_count(dim, level)` signature coordinates of
/// every stream prefix.  All streams must share the grid and tensor shape,
/// and must be computed to at least the requested level; the dense
/// level-major coefficient layout makes truncation a prefix copy.  `weights`
/// are the per-path ψ values (default 1).
pub fn sig_features(
    streams: &[SignatureStream],
    level: usize,
    weights: Option<&[f64]>,
) -> Result<FeatureMatrix> {
    let first = streams
        .first()
        .ok_or_else(|| Error::Domain("no streams given".into()))?;
    let (dim, k) = (first.dim(), first.len());
    if let Some(w) = weights {
        if w.len() != streams.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} streams",
                w.len(),
                streams.len()
            )));
        }
        if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain("weights must be positive and finite".into()));
        }
    }
    let n_cols = coeff_count(dim, level);
    let mut data = Vec::with_capacity(streams.len() * k * n_cols);
    let mut row_weight = Vec::with_capacity(streams.len() * k);
    for (m, stream) in streams.iter().enumerate() {
        if stream.dim() != dim || stream.len() != k || stream.times() != first.times() {
            return Err(Error::DimensionMismatch(format!(
                "stream {m} does not share the grid and dimension of stream 0"
            )));
        }
        if stream.level() < level {
            return Err(Error::Domain(format!(
                "stream {m} has level {}, features need {level}",
                stream.level()
            )));
        }
        let u = weights.map_or(1.0, |w| 1.0 / w[m]);
        for j in 0..k {
            data.extend_from_slice(&stream.element(j).coeffs()[..n_cols]);
            row_weight.push(u);
        }
    }
    Ok(FeatureMatrix {
        n_paths: streams.len(),
        grid_len: k,
        dim,
        level,
        n_cols,
        data,
        row_weight,
    })
}

/// Linear model on signature coordinates; `coeffs` follows the dense
/// level-major word order, entry 0 multiplying the empty word (so it acts
/// as the intercept).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigLinearModel {
    pub dim: usize,
    pub level: usize,
    pub coeffs: Vec<f64>,
}

impl SigLinearModel {
    pub fn zeros(dim: usize, level: usize) -> Self {
        SigLinearModel { dim, level, coeffs: vec![0.0; coeff_count(dim, level)] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.len() != coeff_count(self.dim, self.level) {
            return Err(Error::Config(format!(
                "{} coefficients for dimension {} level {}",
                self.coeffs.len(),
                self.dim,
                self.level
            )));
        }
        Ok(())
    }

    fn check_features(&self, features: &FeatureMatrix) -> Result<()> {
        self.validate()?;
        if features.dim != self.dim || features.level != self.level {
            return Err(Error::DimensionMismatch(format!(
                "model is dimension {} level {}, features are dimension {} level {}",
                self.dim, self.level, features.dim, features.level
            )));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Predictions F·a over every row of the feature table.
pub fn predict_sig(model: &SigLinearModel, features: &FeatureMatrix) -> Result<Vec<f64>> {
    model.check_features(features)?;
    Ok((0..features.n_rows())
        .map(|r| dot(features.row(r), &model.coeffs))
        .collect())
}

fn check_targets(features: &FeatureMatrix, targets: &[f64]) -> Result<()> {
    if targets.len() != features.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for {} feature rows",
            targets.len(),
            features.n_rows()
        )));
    }
    Ok(())
}

/// Weighted MSE, mean over rows of ((y − F·a)/ψ)².
pub fn sig_mse(model: &SigLinearModel, features: &FeatureMatrix, targets: &[f64]) -> Result<f64> {
    model.check_features(features)?;
    check_targets(features, targets)?;
    let mut acc = 0.0;
    for r in 0..features.n_rows() {
        let e = (targets[r] - dot(features.row(r), &model.coeffs)) * features.row_weight[r];
        acc += e * e;
    }
    Ok(acc / features.n_rows() as f64)
}

fn loss_and_grad(
    features: &FeatureMatrix,
    targets: &[f64],
    coeffs: &[f64],
    paths: &[usize],
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let k = features.grid_len;
    let rows = (paths.len() * k) as f64;
    let mut sq = 0.0;
    for &m in paths {
        for r in m * k..(m + 1) * k {
            let row = features.row(r);
            let u = features.row_weight[r];
            let e = (targets[r] - dot(row, coeffs)) * u;
            sq += e * e;
            let c = -2.0 * e * u / rows;
            for (g, f) in grad.iter_mut().zip(row) {
                *g += c * f;
            }
        }
    }
    sq / rows
}

/// Adam on the weighted MSE with path-level minibatches: each epoch
/// shuffles the path order (ChaCha12 keyed by `cfg.seed`) and visits whole
/// row blocks.  The per-epoch training loss averages the minibatch losses;
/// the test loss is recorded every `cfg.test_every` epochs and at the end.
pub fn fit_sig_sgd(
    init: SigLinearModel,
    cfg: &TrainConfig,
    train: &FeatureMatrix,
    targets: &[f64],
    test: Option<(&FeatureMatrix, &[f64])>,
) -> Result<(SigLinearModel, LossCurve)> {
    cfg.validate()?;
    init.check_features(train)?;
    check_targets(train, targets)?;
    if let Some((tf, ty)) = test {
        init.check_features(tf)?;
        check_targets(tf, ty)?;
    }
    let mut model = init;
    let k = train.grid_len;
    let mut adam = Adam::new(cfg.lr, model.coeffs.len());
    let mut grad = vec![0.0; model.coeffs.len()];
    let mut curve = LossCurve::default();
    let mut indices: Vec<usize> = (0..train.n_paths).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    for epoch in 1..=cfg.epochs {
        indices.shuffle(&mut rng);
        let mut epoch_sq = 0.0;
        for chunk in indices.chunks(cfg.batch_size) {
            let batch_loss = loss_and_grad(train, targets, &model.coeffs, chunk, &mut grad);
            epoch_sq += batch_loss * (chunk.len() * k) as f64;
            adam.step(&mut model.coeffs, &grad);
        }
        curve.train.push(epoch_sq / train.n_rows() as f64);
        if let Some((tf, ty)) = test {
            if epoch % cfg.test_every == 0 || epoch == cfg.epochs {
                curve.test.push((epoch, sig_mse(&model, tf, ty)?));
            }
        }
    }
    if !model.coeffs.iter().all(|c| c.is_finite()) {
        return Err(Error::Numeric("training diverged to non-finite coefficients".into()));
    }
    Ok((model, curve))
}

/// Closed-form ridge fit: solves (FᵀU²F/rows + λI) a = FᵀU²y/rows by
/// Cholesky, retrying with small diagonal jitter if the normal matrix is
/// numerically semidefinite.
pub fn fit_sig_ridge(
    features: &FeatureMatrix,
    targets: &[f64],
    lambda: f64,
) -> Result<SigLinearModel> {
    check_targets(features, targets)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Domain(format!("ridge parameter {lambda} must be nonnegative")));
    }
    let n = features.n_cols;
    let rows = features.n_rows();
    let mut gram = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for r in 0..rows {
        let row = features.row(r);
        let u2 = features.row_weight[r] * features.row_weight[r];
        for i in 0..n {
            let c = u2 * row[i];
            if c == 0.0 {
                continue;
            }
            for (g, f) in gram[i * n + i..(i + 1) * n].iter_mut().zip(&row[i..]) {
                *g += c * f;
            }
            rhs[i] += c * targets[r];
        }
    }
    let inv_rows = 1.0 / rows as f64;
    for i in 0..n {
        for j in i..n {
            let v = gram[i * n + j] * inv_rows;
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
        rhs[i] *= inv_rows;
    }
    let trace: f64 = (0..n).map(|i| gram[i * n + i]).sum();
    let base = nalgebra::DMatrix::from_row_slice(n, n, &gram);
    let b = nalgebra::DVector::from_row_slice(&rhs);
    for jitter in [0.0, 1e-10, 1e-8, 1e-6] {
        let mut a = base.clone();
        let shift = lambda + jitter * trace / n as f64;
        for i in 0..n {
            a[(i, i)] += shift;
        }
        if let Some(chol) = a.cholesky() {
            let sol = chol.solve(&b);
            return Ok(SigLinearModel {
                dim: features.dim,
                level: features.level,
                coeffs: sol.iter().copied().collect(),
            });
        }
    }
    Err(Error::Numeric("normal equations are not positive definite".into()))
}
