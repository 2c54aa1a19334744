//! Discrete paths on a shared time grid, Brownian sampling, grid-restricted
//! path norms, and the weights ψ(x) = exp(β·r(x)^γ).
//!
//! A path is a table of values x(t₀), …, x(t_{K−1}) ∈ ℝ^d on a strictly
//! increasing grid starting at t₀ = 0.  All norms here are the grid
//! restrictions of their continuous counterparts: the α-Hölder seminorm
//! sup_{j<k} ‖x(t_k) − x(t_j)‖ / (t_k − t_j)^α and the p-variation
//! maximized over partitions drawn from the grid.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{format_f64, parse_f64, parse_usize, read_csv_lines};
use crate::signature::{pvar_alpha_norm, SignatureStream};

/// Borrowed view of one path: `values` is K×d row-major.
#[derive(Copy, Clone, Debug)]
pub struct PathView<'a> {
    pub times: &'a [f64],
    pub values: &'a [f64],
    pub dim: usize,
}

impl<'a> PathView<'a> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn value(&self, k: usize) -> &'a [f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    fn dist(&self, j: usize, k: usize) -> f64 {
        let (a, b) = (self.value(j), self.value(k));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

fn validate_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidPath("empty time grid".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::InvalidPath(format!(
            "grid must start at 0, got {}",
            times[0]
        )));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidPath(format!(
                "grid not strictly increasing at t = {} → {}",
                w[0], w[1]
            )));
        }
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidPath("non-finite grid time".into()));
    }
    Ok(())
}

/// One path with an owned grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    times: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
}

impl DiscretePath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        validate_grid(&times)?;
        if dim == 0 {
            return Err(Error::InvalidPath("path dimension must be positive".into()));
        }
        if values.len() != times.len() * dim {
            return Err(Error::InvalidPath(format!(
                "value table has {} entries, expected {} × {}",
                values.len(),
                times.len(),
                dim
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("non-finite path value".into()));
        }
        Ok(DiscretePath { times, values, dim })
    }

    pub fn view(&self) -> PathView<'_> {
        PathView { times: &self.times, values: &self.values, dim: self.dim }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A set of paths sharing one time grid, stored contiguously (M × K × d).
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    times: Vec<f64>,
    dim: usize,
    data: Vec<f64>,
}

impl PathBatch {
    pub fn new(times: Vec<f64>, dim: usize, data: Vec<f64>) -> Result<Self> {
        validate_grid(&times)?;
        if dim == 0 {
            return Err(Error::InvalidPath("path dimension must be positive".into()));
        }
        let stride = times.len() * dim;
        if stride == 0 || data.len() % stride != 0 {
            return Err(Error::InvalidPath(format!(
                "data length {} is not a multiple of K×d = {stride}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("non-finite path value".into()));
        }
        Ok(PathBatch { times, dim, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.times.len() * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn grid_len(&self) -> usize {
        self.times.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn path(&self, m: usize) -> PathView<'_> {
        let stride = self.times.len() * self.dim;
        PathView {
            times: &self.times,
            values: &self.data[m * stride..(m + 1) * stride],
            dim: self.dim,
        }
    }

    /// Extracts the sub-batch with the given sample indices, in order.
    pub fn select(&self, indices: &[usize]) -> PathBatch {
        let stride = self.times.len() * self.dim;
        let mut data = Vec::with_capacity(indices.len() * stride);
        for &m in indices {
            data.extend_from_slice(&self.data[m * stride..(m + 1) * stride]);
        }
        PathBatch { times: self.times.clone(), dim: self.dim, data }
    }
}

/// Samples M scalar Brownian paths on the equidistant K-point grid over
/// [0, T]: x(0) = 0 and independent N(0, T/(K−1)) increments.
///
/// Generator: ChaCha12 keyed by `seed`, with stream m reserved for path m,
/// so each path's randomness is independent of how many other paths are
/// drawn and batches are reproducible per (seed, index).
pub fn sample_bm(n_paths: usize, k: usize, t: f64, seed: u64) -> Result<PathBatch> {
    if k < 2 {
        return Err(Error::Config("need at least two grid points".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {t}")));
    }
    let dt = t / (k - 1) as f64;
    let sd = dt.sqrt();
    let times: Vec<f64> = (0..k).map(|j| j as f64 * dt).collect();
    let mut data = Vec::with_capacity(n_paths * k);
    for m in 0..n_paths {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(m as u64);
        let mut x = 0.0;
        data.push(x);
        for _ in 1..k {
            let z: f64 = rng.sample(StandardNormal);
            x += sd * z;
            data.push(x);
        }
    }
    PathBatch::new(times, 1, data)
}

/// Grid-restricted α-Hölder seminorm sup_{j<k} ‖x(t_k) − x(t_j)‖ / (t_k − t_j)^α.
pub fn holder_seminorm(path: PathView<'_>, alpha: f64) -> f64 {
    let k = path.len();
    let mut best = 0.0f64;
    for j in 0..k {
        for l in j + 1..k {
            let gap = (path.times[l] - path.times[j]).powf(alpha);
            best = best.max(path.dist(j, l) / gap);
        }
    }
    best
}

/// Grid p-variation: (max over grid partitions Σ ‖x(t_{i+1}) − x(t_i)‖^p)^(1/p),
/// where partitions run through index subsets containing both endpoints.
///
/// Dynamic programming over end indices; O(K²) distance evaluations.
pub fn p_variation(path: PathView<'_>, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Config(format!("p-variation needs p ≥ 1, got {p}")));
    }
    let k = path.len();
    if k < 2 {
        return Ok(0.0);
    }
    let mut cum = vec![0.0f64; k];
    for j in 1..k {
        let mut best = f64::NEG_INFINITY;
        for i in 0..j {
            let cand = cum[i] + path.dist(i, j).powf(p);
            if cand > best {
                best = cand;
            }
        }
        cum[j] = best;
    }
    Ok(cum[k - 1].powf(1.0 / p))
}

/// Which path norm feeds the weight exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// r = ‖x(0)‖ + α-Hölder seminorm of the raw path.
    HolderPath,
    /// r = (p, α)-norm of a signature stream of the (lifted) path.
    CcPvarAlpha,
}

/// Parameters of the weight ψ(x) = exp(β · r(x)^γ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub alpha: f64,
    pub p: f64,
    pub beta: f64,
    pub gamma: f64,
    pub norm: NormKind,
}

impl WeightSpec {
    pub fn new(alpha: f64, p: f64, beta: f64, gamma: f64, norm: NormKind) -> Result<Self> {
        let spec = WeightSpec { alpha, p, beta, gamma, norm };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if !(self.p >= 1.0) {
            return Err(Error::Config(format!("p must be ≥ 1, got {}", self.p)));
        }
        if !(self.p * self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "need p·α < 1, got {} × {} = {}",
                self.p,
                self.alpha,
                self.p * self.alpha
            )));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::Config(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Evaluates ψ(x) = exp(β·r^γ).  The `CcPvarAlpha` norm is a functional of
/// the lifted path, so it needs the caller to supply a signature stream.
pub fn weight_of(
    path: PathView<'_>,
    spec: &WeightSpec,
    stream: Option<&SignatureStream>,
) -> Result<f64> {
    spec.validate()?;
    let r = match spec.norm {
        NormKind::HolderPath => {
            let x0: f64 = path.value(0).iter().map(|v| v * v).sum::<f64>().sqrt();
            x0 + holder_seminorm(path, spec.alpha)
        }
        NormKind::CcPvarAlpha => {
            let s = stream.ok_or_else(|| {
                Error::Config("cc_pvar_alpha weight requires a signature stream".into())
            })?;
            pvar_alpha_norm(s, spec.p, spec.alpha)?
        }
    };
    Ok((spec.beta * r.powf(spec.gamma)).exp())
}

/// Writes a batch as CSV with header `sample,t,x1,…,xd`, one row per
/// (sample, grid point), floats at 17 significant digits, LF line ends.
pub fn save_paths_csv(batch: &PathBatch, out: &Path) -> Result<()> {
    let file = File::create(out)?;
    let mut w = BufWriter::new(file);
    write!(w, "sample,t")?;
    for i in 1..=batch.dim() {
        write!(w, ",x{i}")?;
    }
    writeln!(w)?;
    for m in 0..batch.len() {
        let path = batch.path(m);
        for k in 0..path.len() {
            write!(w, "{m},{}", format_f64(path.times[k]))?;
            for v in path.value(k) {
                write!(w, ",{}", format_f64(*v))?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Loads a batch saved by [`save_paths_csv`], validating the header, row
/// shape, contiguous sample numbering, and that every sample repeats the
/// identical grid.
pub fn load_paths_csv(input: &Path) -> Result<PathBatch> {
    let fname = input.display().to_string();
    let file = File::open(input)?;
    let (header, rows) = read_csv_lines(file)?;
    if header.len() < 3 || header[0] != "sample" || header[1] != "t" {
        return Err(Error::file_format(&fname, "header must be sample,t,x1,…,xd"));
    }
    let dim = header.len() - 2;
    for (i, h) in header[2..].iter().enumerate() {
        if *h != format!("x{}", i + 1) {
            return Err(Error::file_format(
                &fname,
                format!("column {} must be named x{}, got {h:?}", i + 3, i + 1),
            ));
        }
    }
    let mut times: Vec<f64> = Vec::new();
    let mut data: Vec<f64> = Vec::new();
    let mut cur_sample: Option<usize> = None;
    let mut cur_row = 0usize;
    let map_err = |msg: String| Error::file_format(&fname, msg);
    for (idx, row) in rows.iter().enumerate() {
        let line_no = idx + 2;
        if row.len() != header.len() {
            return Err(map_err(format!(
                "line {line_no}: expected {} fields, got {}",
                header.len(),
                row.len()
            )));
        }
        let sample = parse_usize(&row[0], line_no).map_err(map_err)?;
        let t = parse_f64(&row[1], line_no).map_err(map_err)?;
        match cur_sample {
            None => {
                if sample != 0 {
                    return Err(map_err(format!("line {line_no}: samples must start at 0")));
                }
                cur_sample = Some(0);
            }
            Some(s) if sample == s => {}
            Some(s) if sample == s + 1 => {
                if !times.is_empty() && cur_row != times.len() {
                    return Err(map_err(format!(
                        "line {line_no}: sample {s} has {cur_row} rows, expected {}",
                        times.len()
                    )));
                }
                cur_sample = Some(sample);
                cur_row = 0;
            }
            Some(s) => {
                return Err(map_err(format!(
                    "line {line_no}: sample index jumps from {s} to {sample}"
                )));
            }
        }
        if cur_sample == Some(0) {
            times.push(t);
        } else {
            if cur_row >= times.len() || times[cur_row] != t {
                return Err(map_err(format!(
                    "line {line_no}: grid differs from sample 0 at row {cur_row}"
                )));
            }
        }
        for field in &row[2..] {
            data.push(parse_f64(field, line_no).map_err(map_err)?);
        }
        cur_row += 1;
    }
    if times.is_empty() {
        return Err(map_err("no data rows".into()));
    }
    if cur_row != times.len() {
        return Err(map_err(format!(
            "last sample has {cur_row} rows, expected {}",
            times.len()
        )));
    }
    PathBatch::new(times, dim, data)
}
