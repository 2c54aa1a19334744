//! Signatures of piecewise-linear paths and the (p, α)-norm of their lifts.
//!
//! A discrete path is read as its piecewise-linear interpolation, whose
//! signature is the Chen product of segment exponentials:
//!
//!   S(x)_{0,T} = exp(Δ₁) ⊗ exp(Δ₂) ⊗ … ⊗ exp(Δ_{K−1}),
//!
//! with Δ_k the k-th increment embedded at level 1.  A `SignatureStream`
//! keeps every prefix S_k = S(x)_{0,t_k}, so restrictions come out of the
//! group structure: S(x)_{t_j,t_k} = S_j⁻¹ ⊗ S_k.
//!
//! For time-augmented paths the letter 0 is the time coordinate, which
//! pins a family of exact values: ⟨e₀^⊗k, S(x̂)_{0,t}⟩ = t^k/k!.

use crate::error::{Error, Result};
use crate::path::{DiscretePath, PathView};
use crate::tensor::{
    homogeneous_norm, tensor_exp, tensor_inverse, tensor_mul, TruncatedTensor,
};

/// Hard cap on the truncation level; coefficient tables grow as m^N.
pub const MAX_LEVEL: usize = 12;

fn check_level(level: usize) -> Result<()> {
    if level == 0 || level > MAX_LEVEL {
        return Err(Error::Config(format!(
            "signature level must lie in 1..={MAX_LEVEL}, got {level}"
        )));
    }
    Ok(())
}

/// Prefixes the time coordinate: x̂(t) = (t, x(t)), letter 0 = time.
pub fn time_augment(path: PathView<'_>) -> DiscretePath {
    let k = path.len();
    let d = path.dim;
    let mut values = Vec::with_capacity(k * (d + 1));
    for j in 0..k {
        values.push(path.times[j]);
        values.extend_from_slice(path.value(j));
    }
    DiscretePath::new(path.times.to_vec(), values, d + 1)
        .expect("augmenting a valid path keeps it valid")
}

fn increment(path: PathView<'_>, k: usize, buf: &mut [f64]) {
    let (a, b) = (path.value(k), path.value(k + 1));
    for i in 0..path.dim {
        buf[i] = b[i] - a[i];
    }
}

/// Signature of the piecewise-linear interpolation, truncated at `level`.
pub fn signature(path: PathView<'_>, level: usize) -> Result<TruncatedTensor> {
    check_level(level)?;
    let mut s = TruncatedTensor::unit(path.dim, level);
    let mut delta = vec![0.0; path.dim];
    for k in 0..path.len().saturating_sub(1) {
        increment(path, k, &mut delta);
        let seg = tensor_exp(&TruncatedTensor::from_level1(path.dim, level, &delta))?;
        s = tensor_mul(&s, &seg)?;
    }
    Ok(s)
}

/// All prefix signatures S_0 = 𝟏, S_1, …, S_{K−1} of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureStream {
    times: Vec<f64>,
    elements: Vec<TruncatedTensor>,
}

impl SignatureStream {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn level(&self) -> usize {
        self.elements[0].level()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn element(&self, k: usize) -> &TruncatedTensor {
        &self.elements[k]
    }

    pub fn terminal(&self) -> &TruncatedTensor {
        self.elements.last().expect("streams are never empty")
    }

    /// Signature of the path restricted to [t_j, t_k]: S_j⁻¹ ⊗ S_k.
    pub fn restricted(&self, j: usize, k: usize) -> Result<TruncatedTensor> {
        if j > k || k >= self.len() {
            return Err(Error::Domain(format!(
                "restriction [{j}, {k}] outside stream of length {}",
                self.len()
            )));
        }
        tensor_mul(&tensor_inverse(&self.elements[j])?, &self.elements[k])
    }
}

/// Streams every prefix signature of the path.
pub fn signature_stream(path: PathView<'_>, level: usize) -> Result<SignatureStream> {
    check_level(level)?;
    if path.is_empty() {
        return Err(Error::InvalidPath("cannot stream an empty path".into()));
    }
    let mut elements = Vec::with_capacity(path.len());
    let mut s = TruncatedTensor::unit(path.dim, level);
    elements.push(s.clone());
    let mut delta = vec![0.0; path.dim];
    for k in 0..path.len() - 1 {
        increment(path, k, &mut delta);
        let seg = tensor_exp(&TruncatedTensor::from_level1(path.dim, level, &delta))?;
        s = tensor_mul(&s, &seg)?;
        elements.push(s.clone());
    }
    Ok(SignatureStream { times: path.times.to_vec(), elements })
}

/// The (p, α)-norm of a streamed lift:
///
///   sup_{j<k} d(j,k)/(t_k − t_j)^α  +  (max over grid partitions Σ d^p)^(1/p),
///
/// where d(j,k) is the homogeneous norm of S_j⁻¹ ⊗ S_k.  The variation
/// part is maximized over index subsets containing both endpoints by the
/// same O(K²) dynamic program as the scalar p-variation.
pub fn pvar_alpha_norm(stream: &SignatureStream, p: f64, alpha: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Config(format!("need p ≥ 1, got {p}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("need α in (0,1), got {alpha}")));
    }
    let k = stream.len();
    if k < 2 {
        return Ok(0.0);
    }
    let inverses: Vec<TruncatedTensor> = stream
        .elements
        .iter()
        .map(tensor_inverse)
        .collect::<Result<_>>()?;
    let mut dist = vec![0.0f64; k * k];
    for j in 0..k {
        for l in j + 1..k {
            let g = tensor_mul(&inverses[j], &stream.elements[l])?;
            dist[j * k + l] = homogeneous_norm(&g)?;
        }
    }
    let mut holder = 0.0f64;
    for j in 0..k {
        for l in j + 1..k {
            let gap = (stream.times[l] - stream.times[j]).powf(alpha);
            holder = holder.max(dist[j * k + l] / gap);
        }
    }
    let mut cum = vec![0.0f64; k];
    for l in 1..k {
        let mut best = f64::NEG_INFINITY;
        for j in 0..l {
            let cand = cum[j] + dist[j * k + l].powf(p);
            if cand > best {
                best = cand;
            }
        }
        cum[l] = best;
    }
    Ok(holder + cum[k - 1].powf(1.0 / p))
}
