//! Signature kernels and Gaussian-process regression on them.
//!
//! The kernel pairs two paths through their truncated signatures,
//!
//!   k(x, y) = Σ_{|I| ≤ N} a²_{|I|} ⟨e_I, X̂⟩ ⟨e_I, Ŷ⟩,
//!
//! with one coefficient a_k per word length.  It is the covariance of the
//! centered random series Σ_I a_{|I|} Z_I ⟨e_I, ·⟩ with i.i.d. standard
//! Gaussians Z_I, which [`gp_sample_prior`] draws directly; posterior
//! regression then follows the usual Gaussian conditioning with noise σ².
//!
//! For the unweighted untruncated kernel (a ≡ 1, N → ∞), k(x, y) solves the
//! Goursat problem ∂²K/∂s∂t = K·⟨ẋ_s, ẏ_t⟩ with K = 1 on the axes;
//! [`goursat_kernel`] integrates it on the discrete grid with a
//! second-order two-point scheme, optionally refining each cell dyadically,
//! so the signatures themselves never need to be computed.

use nalgebra::{DMatrix, DVector, Dyn};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::PathView;
use crate::regression::FeatureMatrix;
use crate::tensor::{coeff_count, factorial, TruncatedTensor};

/// Level coefficients a_k of the kernel, with an optional growth check
/// a_k ≤ m·(k!)^δ and an optional noise level for GP regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// a_k for k = 0..=n_sig.
    pub coeffs: Vec<f64>,
    pub n_sig: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
}

impl KernelSpec {
    /// a ≡ 1 up to the given level, no growth check.
    pub fn constant_one(n_sig: usize) -> Self {
        KernelSpec { coeffs: vec![1.0; n_sig + 1], n_sig, m: None, delta: None, sigma2: None }
    }

    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let n_sig = coeffs.len().saturating_sub(1);
        let spec = KernelSpec { coeffs, n_sig, m: None, delta: None, sigma2: None };
        spec.validate()?;
        Ok(spec)
    }

    /// Enables the growth check: every a_k must satisfy a_k ≤ m·(k!)^δ.
    pub fn with_growth(coeffs: Vec<f64>, m: f64, delta: f64) -> Result<Self> {
        let n_sig = coeffs.len().saturating_sub(1);
        let spec = KernelSpec { coeffs, n_sig, m: Some(m), delta: Some(delta), sigma2: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.len() != self.n_sig + 1 {
            return Err(Error::Config(format!(
                "{} level coefficients for truncation {}",
                self.coeffs.len(),
                self.n_sig
            )));
        }
        if self.coeffs.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Config("level coefficients must be nonnegative".into()));
        }
        match (self.m, self.delta) {
            (None, None) => {}
            (Some(m), Some(delta)) => {
                if !(m > 0.0 && m.is_finite()) || !(delta >= 0.0 && delta.is_finite()) {
                    return Err(Error::Config(format!(
                        "growth parameters m = {m}, delta = {delta} out of range"
                    )));
                }
                for (k, a) in self.coeffs.iter().enumerate() {
                    let bound = m * factorial(k).powf(delta);
                    if *a > bound {
                        return Err(Error::Config(format!(
                            "coefficient a_{k} = {a} exceeds the growth bound {bound}"
                        )));
                    }
                }
            }
            _ => {
                return Err(Error::Config(
                    "growth check needs both m and delta or neither".into(),
                ))
            }
        }
        if let Some(s2) = self.sigma2 {
            if !(s2.is_finite() && s2 >= 0.0) {
                return Err(Error::Config(format!("noise level {s2} must be nonnegative")));
            }
        }
        Ok(())
    }

    /// a_{|I|} per coefficient index in the dense level-major layout.
    fn by_column(&self, dim: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(coeff_count(dim, self.n_sig));
        for (k, a) in self.coeffs.iter().enumerate() {
            let width = coeff_count(dim, k) - if k == 0 { 0 } else { coeff_count(dim, k - 1) };
            out.extend(std::iter::repeat(*a).take(width));
        }
        out
    }
}

/// Σ_k a_k² ⟨levelslice_k(x), levelslice_k(y)⟩ over k = 0..=n_sig.
pub fn truncated_kernel(
    spec: &KernelSpec,
    x: &TruncatedTensor,
    y: &TruncatedTensor,
) -> Result<f64> {
    spec.validate()?;
    if x.dim() != y.dim() || x.level() != y.level() {
        return Err(Error::DimensionMismatch(format!(
            "tensors of dimension {} level {} and dimension {} level {}",
            x.dim(),
            x.level(),
            y.dim(),
            y.level()
        )));
    }
    if spec.n_sig != x.level() {
        return Err(Error::Domain(format!(
            "kernel truncation {} does not match tensor level {}",
            spec.n_sig,
            x.level()
        )));
    }
    let mut acc = 0.0;
    for (k, a) in spec.coeffs.iter().enumerate() {
        let dot: f64 = x
            .level_slice(k)
            .iter()
            .zip(y.level_slice(k))
            .map(|(u, v)| u * v)
            .sum();
        acc += a * a * dot;
    }
    Ok(acc)
}

/// Solves the Goursat problem for the unweighted signature kernel on the
/// grid spanned by the two piecewise-linear paths.  Each grid cell carries
/// the constant forcing c = ⟨Δx_i, Δy_j⟩ and is advanced by the
/// second-order update
///
///   K[i+1][j+1] = (K[i+1][j] + K[i][j+1])·(1 + c/2 + c²/12)
///                 − K[i][j]·(1 − c²/12);
///
/// `refine` splits every cell dyadically into refine² subcells (forcing
/// c/refine² each), gaining roughly a factor four in accuracy per doubling.
pub fn goursat_kernel(x: PathView<'_>, y: PathView<'_>, refine: usize) -> Result<f64> {
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch(format!(
            "paths of dimension {} and {}",
            x.dim, y.dim
        )));
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidPath("empty path".into()));
    }
    if refine == 0 {
        return Err(Error::Domain("refinement factor must be at least 1".into()));
    }
    let (nx, ny) = (x.len() - 1, y.len() - 1);
    if nx == 0 || ny == 0 {
        return Ok(1.0);
    }
    let inv_r2 = 1.0 / (refine * refine) as f64;
    let mut dots = vec![0.0; nx * ny];
    for i in 0..nx {
        let (xa, xb) = (x.value(i), x.value(i + 1));
        for j in 0..ny {
            let (ya, yb) = (y.value(j), y.value(j + 1));
            let mut dot = 0.0;
            for d in 0..x.dim {
                dot += (xb[d] - xa[d]) * (yb[d] - ya[d]);
            }
            dots[i * ny + j] = dot * inv_r2;
        }
    }
    let cols = ny * refine;
    let mut prev = vec![1.0; cols + 1];
    let mut curr = vec![1.0; cols + 1];
    for ii in 0..nx * refine {
        let row = &dots[(ii / refine) * ny..(ii / refine + 1) * ny];
        for jj in 0..cols {
            let c = row[jj / refine];
            curr[jj + 1] = (curr[jj] + prev[jj + 1]) * (1.0 + c * (0.5 + c / 12.0))
                - prev[jj] * (1.0 - c * c / 12.0);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[cols])
}

fn check_features(spec: &KernelSpec, features: &FeatureMatrix) -> Result<()> {
    spec.validate()?;
    if features.level() != spec.n_sig {
        return Err(Error::Domain(format!(
            "kernel truncation {} does not match feature level {}",
            spec.n_sig,
            features.level()
        )));
    }
    Ok(())
}

/// Draws sample functions of the centered prior Σ_I a_{|I|} Z_I ⟨e_I, ·⟩ at
/// the given feature rows.  Sample s uses ChaCha12 stream s of `seed`, one
/// standard normal per coefficient in column order, so each sample is
/// reproducible in isolation.
pub fn gp_sample_prior(
    spec: &KernelSpec,
    features: &FeatureMatrix,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_features(spec, features)?;
    let a = spec.by_column(features.dim());
    let mut samples = Vec::with_capacity(n_samples);
    for s in 0..n_samples {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        let w: Vec<f64> = a
            .iter()
            .map(|ak| ak * rng.sample::<f64, _>(StandardNormal))
            .collect();
        samples.push(
            (0..features.n_rows())
                .map(|r| features.row(r).iter().zip(&w).map(|(f, wi)| f * wi).sum())
                .collect(),
        );
    }
    Ok(samples)
}

/// Fitted Gaussian-process posterior: the column-scaled training features,
/// the Cholesky factor of (Gram + σ²I) after any jitter, and the dual
/// weights (Gram + σ²I)⁻¹y.
pub struct GpPosterior {
    scaled_train: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, Dyn>,
    dual: DVector<f64>,
    sigma2: f64,
    dim: usize,
    level: usize,
}

fn scaled_matrix(spec: &KernelSpec, features: &FeatureMatrix) -> DMatrix<f64> {
    let a = spec.by_column(features.dim());
    DMatrix::from_fn(features.n_rows(), features.n_cols(), |r, c| features.row(r)[c] * a[c])
}

/// Conditions the prior on noisy observations: factors Gram + σ²I by
/// Cholesky, escalating through the jitter ladder 1e−12, 1e−10, 1e−8 times
/// the mean diagonal if the unjittered matrix is numerically semidefinite.
pub fn gp_fit(
    train: &FeatureMatrix,
    targets: &[f64],
    spec: &KernelSpec,
    sigma2: f64,
) -> Result<GpPosterior> {
    check_features(spec, train)?;
    if targets.len() != train.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for {} feature rows",
            targets.len(),
            train.n_rows()
        )));
    }
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::Domain(format!("noise level {sigma2} must be nonnegative")));
    }
    let g = scaled_matrix(spec, train);
    let gram = &g * g.transpose();
    let n = train.n_rows();
    let mean_diag = gram.trace() / n as f64;
    let y = DVector::from_row_slice(targets);
    for jitter in [0.0, 1e-12, 1e-10, 1e-8] {
        let mut a = gram.clone();
        let shift = sigma2 + jitter * mean_diag;
        for i in 0..n {
            a[(i, i)] += shift;
        }
        if let Some(chol) = nalgebra::Cholesky::new(a) {
            let dual = chol.solve(&y);
            return Ok(GpPosterior {
                scaled_train: g,
                chol,
                dual,
                sigma2,
                dim: train.dim(),
                level: train.level(),
            });
        }
    }
    Err(Error::Numeric(
        "Gram matrix is not positive definite after jitter escalation".into(),
    ))
}

impl GpPosterior {
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn n_train(&self) -> usize {
        self.scaled_train.nrows()
    }

    /// Posterior mean k_*ᵀ(K+σ²I)⁻¹y and variance k_** − k_*ᵀ(K+σ²I)⁻¹k_*
    /// per test row, the variance clipped at zero against cancellation.
    pub fn predict(&self, spec: &KernelSpec, test: &FeatureMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
        check_features(spec, test)?;
        if test.dim() != self.dim || test.level() != self.level {
            return Err(Error::DimensionMismatch(format!(
                "posterior was fit at dimension {} level {}, test features are dimension {} level {}",
                self.dim,
                self.level,
                test.dim(),
                test.level()
            )));
        }
        let g_test = scaled_matrix(spec, test);
        let k_star = &g_test * self.scaled_train.transpose();
        let mean = (&k_star * &self.dual).iter().copied().collect();
        let z = self
            .chol
            .l()
            .solve_lower_triangular(&k_star.transpose())
            .ok_or_else(|| Error::Numeric("triangular solve failed".into()))?;
        let variance = (0..test.n_rows())
            .map(|i| {
                let prior: f64 = g_test.row(i).iter().map(|v| v * v).sum();
                let explained: f64 = z.column(i).iter().map(|v| v * v).sum();
                (prior - explained).max(0.0)
            })
            .collect();
        Ok((mean, variance))
    }
}

/// One-call fit and predict.
pub fn gp_fit_predict(
    train: &FeatureMatrix,
    targets: &[f64],
    spec: &KernelSpec,
    sigma2: f64,
    test: &FeatureMatrix,
) -> Result<(Vec<f64>, Vec<f64>)> {
    gp_fit(train, targets, spec, sigma2)?.predict(spec, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{sample_bm, DiscretePath};
    use crate::signature::{signature, time_augment};

    fn linear_path(slope: f64, points: usize) -> DiscretePath {
        let times: Vec<f64> = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| slope * t).collect();
        DiscretePath::new(times, values, 1).unwrap()
    }

    fn closed_form_series(rho: f64, terms: usize) -> f64 {
        (0..=terms).map(|n| rho.powi(n as i32) / (factorial(n) * factorial(n))).sum()
    }

    fn scaled_bm_path(k: usize, seed: u64, scale: f64) -> DiscretePath {
        let batch = sample_bm(1, k, 1.0, seed).unwrap();
        let view = batch.path(0);
        let values: Vec<f64> = view.values.iter().map(|v| v * scale).collect();
        DiscretePath::new(view.times.to_vec(), values, 1).unwrap()
    }

    fn two_dim_path(k: usize, seed: u64, scale: f64) -> DiscretePath {
        let batch = sample_bm(2, k, 1.0, seed).unwrap();
        let (a, b) = (batch.path(0), batch.path(1));
        let mut values = Vec::with_capacity(2 * k);
        for j in 0..k {
            values.push(a.value(j)[0] * scale);
            values.push(b.value(j)[0] * scale);
        }
        DiscretePath::new(a.times.to_vec(), values, 2).unwrap()
    }

    fn total_variation(path: &DiscretePath) -> f64 {
        let view = path.view();
        let mut tv = 0.0;
        for j in 1..view.len() {
            let mut step = 0.0;
            for d in 0..view.dim {
                step += (view.value(j)[d] - view.value(j - 1)[d]).powi(2);
            }
            tv += step.sqrt();
        }
        tv
    }

    #[test]
    fn unit_signatures_pair_to_one() {
        let unit = TruncatedTensor::unit(2, 4);
        let spec = KernelSpec::constant_one(4);
        assert_eq!(truncated_kernel(&spec, &unit, &unit).unwrap(), 1.0);
        let constant = DiscretePath::new(vec![0.0, 0.5, 1.0], vec![2.0; 3], 1).unwrap();
        let wiggly = scaled_bm_path(10, 3, 0.5);
        assert_eq!(goursat_kernel(constant.view(), wiggly.view(), 1).unwrap(), 1.0);
    }

    #[test]
    fn gram_matrix_is_symmetric_and_psd() {
        let spec = KernelSpec::constant_one(4);
        let sigs: Vec<TruncatedTensor> = (0..6)
            .map(|s| {
                let batch = sample_bm(1, 12, 1.0, 100 + s).unwrap();
                signature(time_augment(batch.path(0)).view(), 4).unwrap()
            })
            .collect();
        let mut gram = DMatrix::zeros(6, 6);
        for i in 0..6 {
            for j in 0..6 {
                gram[(i, j)] = truncated_kernel(&spec, &sigs[i], &sigs[j]).unwrap();
            }
        }
        for i in 0..6 {
            for j in 0..i {
                assert_eq!(gram[(i, j)], gram[(j, i)]);
            }
        }
        let trace = gram.trace();
        let eigs = gram.symmetric_eigenvalues();
        assert!(eigs.iter().all(|e| *e >= -1e-8 * trace), "{eigs:?}");
    }

    #[test]
    fn linear_paths_match_the_closed_form_series() {
        let (a, b) = (0.7, -0.4);
        let rho = 1.0 + a * b;
        let x = time_augment(linear_path(a, 2).view());
        let y = time_augment(linear_path(b, 2).view());
        let spec = KernelSpec::constant_one(10);
        let k = truncated_kernel(
            &spec,
            &signature(x.view(), 10).unwrap(),
            &signature(y.view(), 10).unwrap(),
        )
        .unwrap();
        assert!((k - closed_form_series(rho, 10)).abs() <= 1e-10);

        let xg = time_augment(linear_path(a, 200).view());
        let yg = time_augment(linear_path(b, 200).view());
        let g = goursat_kernel(xg.view(), yg.view(), 1).unwrap();
        let full = closed_form_series(rho, 30);
        assert!(
            (g - full).abs() <= 1e-6 * full.abs(),
            "goursat {g} vs series {full}"
        );
    }

    #[test]
    fn goursat_matches_truncated_kernel_on_short_paths() {
        let x = two_dim_path(40, 7, 0.05);
        let y = two_dim_path(40, 8, 0.05);
        assert!(total_variation(&x) <= 1.0 && total_variation(&y) <= 1.0);
        let spec = KernelSpec::constant_one(12);
        let sx = signature(x.view(), 12).unwrap();
        let sy = signature(y.view(), 12).unwrap();
        let truncated = truncated_kernel(&spec, &sx, &sy).unwrap();
        let g = goursat_kernel(x.view(), y.view(), 1).unwrap();
        assert!(
            (g - truncated).abs() <= 1e-6 * truncated.abs(),
            "goursat {g} vs truncated {truncated}"
        );
    }

    #[test]
    fn goursat_refinement_tightens_the_error() {
        let x = two_dim_path(15, 11, 0.06);
        let y = two_dim_path(15, 12, 0.06);
        let spec = KernelSpec::constant_one(12);
        let reference = truncated_kernel(
            &spec,
            &signature(x.view(), 12).unwrap(),
            &signature(y.view(), 12).unwrap(),
        )
        .unwrap();
        let err: Vec<f64> = [1, 2, 4]
            .iter()
            .map(|&r| (goursat_kernel(x.view(), y.view(), r).unwrap() - reference).abs())
            .collect();
        assert!(err[1] < err[0] && err[2] < err[1], "{err:?}");
        assert!(err[2] <= err[0] / 6.0, "{err:?}");
    }

    #[test]
    fn goursat_is_symmetric_in_its_arguments() {
        let x = two_dim_path(20, 13, 0.3);
        let y = two_dim_path(25, 14, 0.3);
        let a = goursat_kernel(x.view(), y.view(), 2).unwrap();
        let b = goursat_kernel(y.view(), x.view(), 2).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn growth_check_rejects_offending_coefficients() {
        let factorial_coeffs = vec![1.0, 1.0, 2.0, 6.0, 24.0];
        assert!(KernelSpec::with_growth(factorial_coeffs.clone(), 1.0, 0.5).is_err());
        assert!(KernelSpec::with_growth(factorial_coeffs, 1.0, 1.0).is_ok());
        assert!(KernelSpec::with_growth(vec![1.0; 5], 1.0, 0.0).is_ok());
        assert!(KernelSpec::new(vec![1.0, -0.5]).is_err());
        let mut spec = KernelSpec::constant_one(2);
        spec.m = Some(1.0);
        assert!(spec.validate().is_err());
        spec.m = None;
        spec.sigma2 = Some(-1.0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = KernelSpec {
            coeffs: vec![1.0, 0.5, 0.25],
            n_sig: 2,
            m: Some(2.0),
            delta: Some(0.4),
            sigma2: Some(1e-4),
        };
        let text = serde_json::to_string(&spec).unwrap();
        let back: KernelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        let bare: KernelSpec = serde_json::from_str(r#"{"coeffs":[1.0,1.0],"n_sig":1}"#).unwrap();
        assert_eq!(bare.m, None);
    }

    fn terminal_features(n: usize, level: usize, seed: u64) -> FeatureMatrix {
        let sigs: Vec<TruncatedTensor> = (0..n)
            .map(|s| {
                let batch = sample_bm(1, 10, 1.0, seed + s as u64).unwrap();
                signature(time_augment(batch.path(0)).view(), level).unwrap()
            })
            .collect();
        let refs: Vec<&TruncatedTensor> = sigs.iter().collect();
        FeatureMatrix::from_tensors(&refs, level, None).unwrap()
    }

    fn squared_by_column(spec: &KernelSpec, dim: usize) -> Vec<f64> {
        spec.by_column(dim).iter().map(|a| a * a).collect()
    }

    #[test]
    fn prior_covariance_matches_the_kernel() {
        let level = 3;
        let spec = KernelSpec::new(vec![1.0, 0.8, 0.5, 0.3]).unwrap();
        let features = terminal_features(3, level, 200);
        let n = 20_000;
        let samples = gp_sample_prior(&spec, &features, n, 77).unwrap();
        let kernel_of = |i: usize, j: usize| -> f64 {
            let a2 = squared_by_column(&spec, features.dim());
            features
                .row(i)
                .iter()
                .zip(features.row(j))
                .zip(&a2)
                .map(|((x, y), a)| a * x * y)
                .sum()
        };
        for (i, j) in [(0, 1), (0, 2), (1, 2), (0, 0), (2, 2)] {
            let want = kernel_of(i, j);
            let cov: f64 = samples.iter().map(|s| s[i] * s[j]).sum::<f64>() / n as f64;
            let se = ((kernel_of(i, i) * kernel_of(j, j) + want * want) / n as f64).sqrt();
            assert!(
                (cov - want).abs() <= 3.0 * se,
                "pair ({i},{j}): cov {cov} vs kernel {want}, se {se}"
            );
        }
        for i in 0..3 {
            let mean: f64 = samples.iter().map(|s| s[i]).sum::<f64>() / n as f64;
            let se = (kernel_of(i, i) / n as f64).sqrt();
            assert!(mean.abs() <= 3.0 * se);
        }
    }

    #[test]
    fn prior_samples_lie_in_the_feature_span() {
        let spec = KernelSpec::constant_one(2);
        let features = terminal_features(8, 2, 300);
        let samples = gp_sample_prior(&spec, &features, 4, 5).unwrap();
        let f = DMatrix::from_fn(8, features.n_cols(), |r, c| features.row(r)[c]);
        let svd = f.clone().svd(true, true);
        for s in &samples {
            let v = DVector::from_row_slice(s);
            let w = svd.solve(&v, 1e-12).unwrap();
            let residual = (&f * w - &v).norm();
            assert!(residual <= 1e-10 * v.norm().max(1.0), "residual {residual}");
        }
    }

    #[test]
    fn posterior_interpolates_training_points_at_tiny_noise() {
        let spec = KernelSpec::constant_one(3);
        let features = terminal_features(5, 3, 400);
        let y = vec![0.7, -1.1, 0.3, 2.0, -0.4];
        let (mean, var) = gp_fit_predict(&features, &y, &spec, 1e-12, &features).unwrap();
        for i in 0..5 {
            assert!((mean[i] - y[i]).abs() <= 1e-6 * (1.0 + y[i].abs()), "{mean:?}");
            assert!(var[i] <= 1e-6, "{var:?}");
        }
    }

    #[test]
    fn two_point_posterior_matches_the_hand_formula() {
        let spec = KernelSpec::constant_one(2);
        let features = terminal_features(3, 2, 500);
        let train = features.select(&[0, 1]).unwrap();
        let test = features.select(&[2]).unwrap();
        let y = [1.4, -0.6];
        let sigma2 = 0.1;
        let k = |i: usize, j: usize| -> f64 {
            features
                .row(i)
                .iter()
                .zip(features.row(j))
                .map(|(a, b)| a * b)
                .sum::<f64>()
        };
        let (k11, k12, k22) = (k(0, 0) + sigma2, k(0, 1), k(1, 1) + sigma2);
        let det = k11 * k22 - k12 * k12;
        let (v1, v2) = (k(2, 0), k(2, 1));
        let a1 = (k22 * y[0] - k12 * y[1]) / det;
        let a2 = (-k12 * y[0] + k11 * y[1]) / det;
        let want_mean = v1 * a1 + v2 * a2;
        let q1 = (k22 * v1 - k12 * v2) / det;
        let q2 = (-k12 * v1 + k11 * v2) / det;
        let want_var = k(2, 2) - (v1 * q1 + v2 * q2);
        let (mean, var) = gp_fit_predict(&train, &y, &spec, sigma2, &test).unwrap();
        assert!((mean[0] - want_mean).abs() <= 1e-10 * want_mean.abs().max(1.0));
        assert!((var[0] - want_var).abs() <= 1e-10 * want_var.abs().max(1.0));
    }

    #[test]
    fn zero_targets_give_zero_posterior_mean() {
        let spec = KernelSpec::constant_one(2);
        let features = terminal_features(4, 2, 600);
        let train = features.select(&[0, 1, 2]).unwrap();
        let test = features.select(&[3]).unwrap();
        let (mean, var_zero) = gp_fit_predict(&train, &[0.0; 3], &spec, 0.01, &test).unwrap();
        assert!(mean[0].abs() <= 1e-14);
        let (_, var_other) = gp_fit_predict(&train, &[1.0, 2.0, 3.0], &spec, 0.01, &test).unwrap();
        assert_eq!(var_zero, var_other);
    }

    #[test]
    fn posterior_variance_never_exceeds_prior_variance() {
        let spec = KernelSpec::new(vec![1.0, 0.7, 0.4]).unwrap();
        let features = terminal_features(8, 2, 700);
        let train = features.select(&[0, 1, 2, 3, 4]).unwrap();
        let test = features.select(&[5, 6, 7]).unwrap();
        let y = [0.2, -0.9, 1.3, 0.8, -0.1];
        let posterior = gp_fit(&train, &y, &spec, 0.05).unwrap();
        let (_, var) = posterior.predict(&spec, &test).unwrap();
        let a2 = squared_by_column(&spec, features.dim());
        for (i, v) in var.iter().enumerate() {
            let prior: f64 = test.row(i).iter().zip(&a2).map(|(f, a)| a * f * f).sum();
            assert!(*v <= prior + 1e-8, "variance {v} vs prior {prior}");
        }
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let spec = KernelSpec::constant_one(3);
        let x = TruncatedTensor::unit(2, 3);
        let y = TruncatedTensor::unit(2, 4);
        assert!(truncated_kernel(&spec, &x, &y).is_err());
        assert!(truncated_kernel(&spec, &y, &y).is_err());
        let features = terminal_features(3, 2, 800);
        assert!(gp_sample_prior(&spec, &features, 1, 0).is_err());
        assert!(gp_fit(&features, &[0.0; 2], &KernelSpec::constant_one(2), 0.1).is_err());
        let fit = gp_fit(&features, &[0.0; 3], &KernelSpec::constant_one(2), 0.1).unwrap();
        assert!(fit.predict(&KernelSpec::constant_one(2), &terminal_features(2, 3, 900)).is_err());
        let one_point = DiscretePath::new(vec![0.0], vec![0.0], 1).unwrap();
        assert_eq!(goursat_kernel(one_point.view(), one_point.view(), 1).unwrap(), 1.0);
        let two = DiscretePath::new(vec![0.0, 1.0], vec![0.0, 1.0], 1).unwrap();
        assert!(goursat_kernel(two.view(), two.view(), 0).is_err());
    }
}
