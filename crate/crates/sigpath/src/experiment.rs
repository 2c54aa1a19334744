//! End-to-end experiment harness: Brownian data, the two path functionals,
//! weighted training of both model families, and artifact emission.
//!
//! A run samples M Brownian paths on a K-point grid, evaluates the chosen
//! target functional at every grid point, attaches the weight ψ(x) matching
//! the model family (Hölder-based for the functional network, (p,α)-based
//! on the lift for the signature model), splits the paths 80/20 by a seeded
//! shuffle, trains, and writes a bundle of artifacts under one directory:
//!
//!   config.json      the fully resolved configuration
//!   loss_curve.csv   per-epoch training loss and periodic test loss
//!   model.json       the trained parameters, tagged by model kind
//!   predictions.csv  sample,k,t,target,prediction,weight over all paths
//!   metrics.json     initial/final weighted MSEs, zero baselines, runtime
//!
//! Everything downstream of the seed is deterministic: rerunning a config
//! reproduces every artifact except the runtime field bit for bit.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fnn::{fnn_forward, train_fnn, Dataset, FnnParams};
use crate::io::{format_f64, parse_f64, parse_usize, read_csv_lines};
use crate::optim::{LossCurve, TrainConfig};
use crate::path::{sample_bm, weight_of, NormKind, PathBatch, PathView, WeightSpec};
use crate::regression::{fit_sig_sgd, predict_sig, sig_features, SigLinearModel};
use crate::signature::{signature_stream, time_augment, MAX_LEVEL};

/// Floor of the clipped-average target.
pub const CLIP_FLOOR: f64 = -0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetId {
    F1,
    F2,
}

impl std::str::FromStr for TargetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f1" => Ok(TargetId::F1),
            "f2" => Ok(TargetId::F2),
            other => Err(Error::Config(format!("unknown target {other:?}, expected f1 or f2"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    Fnn,
    Sig,
}

impl std::str::FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fnn" => Ok(ModelId::Fnn),
            "sig" => Ok(ModelId::Sig),
            other => Err(Error::Config(format!("unknown model {other:?}, expected fnn or sig"))),
        }
    }
}

/// Running maximum sup_{s ≤ t_k} x(s) of a scalar path.
pub fn target_running_max(k: usize, path: PathView<'_>) -> Result<f64> {
    check_scalar(path, k)?;
    let mut best = f64::NEG_INFINITY;
    for j in 0..=k {
        best = best.max(path.value(j)[0]);
    }
    Ok(best)
}

/// Clipped running average max((1/t_k)∫₀^{t_k} x ds, −0.3) with the
/// integral taken as the left Riemann sum on the grid; at k = 0 the
/// average degenerates to x(0), its continuity limit.
pub fn target_clipped_average(k: usize, path: PathView<'_>) -> Result<f64> {
    check_scalar(path, k)?;
    if k == 0 {
        return Ok(path.value(0)[0].max(CLIP_FLOOR));
    }
    let mut integral = 0.0;
    for j in 0..k {
        integral += (path.times[j + 1] - path.times[j]) * path.value(j)[0];
    }
    Ok((integral / path.times[k]).max(CLIP_FLOOR))
}

fn check_scalar(path: PathView<'_>, k: usize) -> Result<()> {
    if path.dim != 1 {
        return Err(Error::Domain(format!(
            "targets are defined for scalar paths, got dimension {}",
            path.dim
        )));
    }
    if k >= path.len() {
        return Err(Error::Domain(format!(
            "grid index {k} out of range for {} points",
            path.len()
        )));
    }
    Ok(())
}

/// The chosen target at every grid point of one path.
pub fn target_values(target: TargetId, path: PathView<'_>) -> Result<Vec<f64>> {
    check_scalar(path, 0)?;
    let k = path.len();
    let mut out = Vec::with_capacity(k);
    match target {
        TargetId::F1 => {
            let mut best = f64::NEG_INFINITY;
            for j in 0..k {
                best = best.max(path.value(j)[0]);
                out.push(best);
            }
        }
        TargetId::F2 => {
            out.push(path.value(0)[0].max(CLIP_FLOOR));
            let mut integral = 0.0;
            for j in 1..k {
                integral += (path.times[j] - path.times[j - 1]) * path.value(j - 1)[0];
                out.push((integral / path.times[j]).max(CLIP_FLOOR));
            }
        }
    }
    Ok(out)
}

fn default_m() -> usize {
    2000
}
fn default_k() -> usize {
    100
}
fn default_t() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.4
}
fn default_p() -> f64 {
    2.1
}
fn default_beta() -> f64 {
    0.01
}
fn default_gamma() -> f64 {
    3.0
}
fn default_n_sig() -> usize {
    7
}
fn default_n_fnn() -> usize {
    40
}
fn default_n1() -> usize {
    30
}
fn default_lr() -> f64 {
    1e-5
}
fn default_batch_size() -> usize {
    500
}
fn default_epochs() -> usize {
    4000
}
fn default_test_every() -> usize {
    200
}
fn default_target() -> TargetId {
    TargetId::F1
}
fn default_model() -> ModelId {
    ModelId::Fnn
}

/// Full description of one experiment cell.  Omitted fields of a JSON
/// config take the desk-scale defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_n_sig")]
    pub n_sig: usize,
    #[serde(default = "default_n_fnn")]
    pub n_fnn: usize,
    #[serde(default = "default_n1")]
    pub n1: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_test_every")]
    pub test_every: usize,
    #[serde(default = "default_target")]
    pub target: TargetId,
    #[serde(default = "default_model")]
    pub model: ModelId,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk_scale()
    }
}

impl ExperimentConfig {
    /// M = 2000 paths, all other settings at their reference values.
    pub fn desk_scale() -> Self {
        ExperimentConfig {
            m: default_m(),
            k: default_k(),
            t: default_t(),
            seed: 0,
            alpha: default_alpha(),
            p: default_p(),
            beta: default_beta(),
            gamma: default_gamma(),
            n_sig: default_n_sig(),
            n_fnn: default_n_fnn(),
            n1: default_n1(),
            lr: default_lr(),
            batch_size: default_batch_size(),
            epochs: default_epochs(),
            test_every: default_test_every(),
            target: default_target(),
            model: default_model(),
        }
    }

    /// The full-size run: M = 50000 paths.
    pub fn paper_scale() -> Self {
        ExperimentConfig { m: 50_000, ..Self::desk_scale() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 5 {
            return Err(Error::Config(format!(
                "need at least 5 paths for an 80/20 split, got {}",
                self.m
            )));
        }
        if self.k < 2 {
            return Err(Error::Config(format!("need at least 2 grid points, got {}", self.k)));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.t)));
        }
        if self.n_sig == 0 || self.n_sig > MAX_LEVEL {
            return Err(Error::Config(format!(
                "signature truncation must lie in 1..={MAX_LEVEL}, got {}",
                self.n_sig
            )));
        }
        if self.n_fnn == 0 || self.n1 == 0 {
            return Err(Error::Config("network sizes must be positive".into()));
        }
        self.weight_spec().map(|_| ())?;
        if self.weight_level() > MAX_LEVEL {
            return Err(Error::Config(format!(
                "weight lift level ⌊1/α⌋ = {} exceeds the level cap {MAX_LEVEL}",
                self.weight_level()
            )));
        }
        self.train_config().validate()
    }

    /// The weight norm follows the model family: path-space Hölder norm for
    /// the functional network, (p,α)-norm of the lift for signatures.
    pub fn weight_spec(&self) -> Result<WeightSpec> {
        let norm = match self.model {
            ModelId::Fnn => NormKind::HolderPath,
            ModelId::Sig => NormKind::CcPvarAlpha,
        };
        WeightSpec::new(self.alpha, self.p, self.beta, self.gamma, norm)
    }

    /// Lift level ⌊1/α⌋ used by the (p,α)-norm.
    pub fn weight_level(&self) -> usize {
        (1.0 / self.alpha).floor() as usize
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            test_every: self.test_every,
            seed: derive_seed(self.seed, TRAIN_SALT),
        }
    }

    pub fn n_train(&self) -> usize {
        (self.m as f64 * 0.8).floor() as usize
    }
}

const SPLIT_SALT: u64 = 1;
const INIT_SALT: u64 = 2;
const TRAIN_SALT: u64 = 3;

/// Decorrelates the seeds handed to path sampling (which uses the raw seed
/// with one ChaCha stream per path), the train/test shuffle, the network
/// initialization, and the epoch shuffles.
fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic 80/20 split: path indices are shuffled by a ChaCha12
/// generator derived from the seed and the first ⌊0.8·m⌋ become training.
pub fn split_indices(m: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, SPLIT_SALT));
    perm.shuffle(&mut rng);
    let n_train = (m as f64 * 0.8).floor() as usize;
    let test = perm.split_off(n_train);
    (perm, test)
}

/// Weights ψ for every path of a batch.  The (p,α)-norm variant lifts each
/// path (time augmented) to `weight_level` and measures the stream.
pub fn path_weights(
    batch: &PathBatch,
    spec: &WeightSpec,
    weight_level: usize,
) -> Result<Vec<f64>> {
    let mut weights = Vec::with_capacity(batch.len());
    for m in 0..batch.len() {
        let view = batch.path(m);
        let w = match spec.norm {
            NormKind::HolderPath => weight_of(view, spec, None)?,
            NormKind::CcPvarAlpha => {
                let lifted = time_augment(view);
                let stream = signature_stream(lifted.view(), weight_level)?;
                weight_of(view, spec, Some(&stream))?
            }
        };
        weights.push(w);
    }
    Ok(weights)
}

/// Trained parameters as persisted in model.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelArtifact {
    Fnn(FnnParams),
    Sig(SigLinearModel),
}

/// Contents of metrics.json.  All loss fields are weighted MSEs over the
/// respective split; rerunning a config reproduces every field except
/// `runtime_seconds` bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub initial_train_wmse: f64,
    pub initial_test_wmse: f64,
    pub final_train_wmse: f64,
    pub final_test_wmse: f64,
    pub zero_baseline_train_wmse: f64,
    pub zero_baseline_test_wmse: f64,
    pub runtime_seconds: f64,
    pub seed: u64,
}

/// Recomputed losses of a stored run, as reported by evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub train_wmse: f64,
    pub test_wmse: f64,
    pub zero_baseline_train_wmse: f64,
    pub zero_baseline_test_wmse: f64,
    pub n_train: usize,
    pub n_test: usize,
}

struct Prepared {
    batch: PathBatch,
    targets: Vec<f64>,
    weights: Vec<f64>,
    train_idx: Vec<usize>,
    test_idx: Vec<usize>,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let batch = sample_bm(cfg.m, cfg.k, cfg.t, cfg.seed)?;
    let mut targets = Vec::with_capacity(cfg.m * cfg.k);
    for m in 0..cfg.m {
        targets.extend(target_values(cfg.target, batch.path(m))?);
    }
    let weights = path_weights(&batch, &cfg.weight_spec()?, cfg.weight_level())?;
    let (train_idx, test_idx) = split_indices(cfg.m, cfg.seed);
    Ok(Prepared { batch, targets, weights, train_idx, test_idx })
}

fn select_rows(values: &[f64], grid: usize, indices: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(indices.len() * grid);
    for &m in indices {
        out.extend_from_slice(&values[m * grid..(m + 1) * grid]);
    }
    out
}

fn select_scalars(values: &[f64], indices: &[usize]) -> Vec<f64> {
    indices.iter().map(|&m| values[m]).collect()
}

fn loss_over(
    preds: &[f64],
    targets: &[f64],
    weights: &[f64],
    grid: usize,
    indices: &[usize],
) -> f64 {
    let mut acc = 0.0;
    for &m in indices {
        let u2 = 1.0 / (weights[m] * weights[m]);
        for r in m * grid..(m + 1) * grid {
            let e = targets[r] - preds[r];
            acc += e * e * u2;
        }
    }
    acc / (indices.len() * grid) as f64
}

fn zero_loss_over(targets: &[f64], weights: &[f64], grid: usize, indices: &[usize]) -> f64 {
    let mut acc = 0.0;
    for &m in indices {
        let u2 = 1.0 / (weights[m] * weights[m]);
        for r in m * grid..(m + 1) * grid {
            acc += targets[r] * targets[r] * u2;
        }
    }
    acc / (indices.len() * grid) as f64
}

fn fnn_predictions(params: &FnnParams, batch: &PathBatch) -> Result<Vec<f64>> {
    let mut preds = Vec::with_capacity(batch.len() * batch.grid_len());
    for m in 0..batch.len() {
        preds.extend(fnn_forward(params, batch.path(m))?);
    }
    Ok(preds)
}

/// Runs one experiment cell and writes the artifact bundle into `out_dir`
/// (created if missing).  Returns the metrics that were written.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Metrics> {
    let started = Instant::now();
    let prepared = prepare(cfg)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::file_format(out_dir, format!("cannot create directory: {e}")))?;
    let Prepared { batch, targets, weights, train_idx, test_idx } = &prepared;
    let grid = cfg.k;
    let tc = cfg.train_config();

    let (artifact, curve, initial_preds, final_preds) = match cfg.model {
        ModelId::Fnn => {
            let spatial = cfg.target == TargetId::F1;
            let init = FnnParams::init(cfg.n_fnn, cfg.n1, 1, spatial, derive_seed(cfg.seed, INIT_SALT));
            let train_ds = Dataset::new(
                batch.select(train_idx),
                select_rows(targets, grid, train_idx),
                select_scalars(weights, train_idx),
            )?;
            let test_ds = Dataset::new(
                batch.select(test_idx),
                select_rows(targets, grid, test_idx),
                select_scalars(weights, test_idx),
            )?;
            let initial_preds = fnn_predictions(&init, batch)?;
            let (trained, curve) = train_fnn(init, &tc, &train_ds, Some(&test_ds))?;
            let final_preds = fnn_predictions(&trained, batch)?;
            (ModelArtifact::Fnn(trained), curve, initial_preds, final_preds)
        }
        ModelId::Sig => {
            let streams: Vec<_> = (0..cfg.m)
                .map(|m| signature_stream(time_augment(batch.path(m)).view(), cfg.n_sig))
                .collect::<Result<_>>()?;
            let features = sig_features(&streams, cfg.n_sig, Some(weights))?;
            drop(streams);
            let train_f = features.select(train_idx)?;
            let test_f = features.select(test_idx)?;
            let train_y = select_rows(targets, grid, train_idx);
            let test_y = select_rows(targets, grid, test_idx);
            let init = SigLinearModel::zeros(2, cfg.n_sig);
            let initial_preds = vec![0.0; cfg.m * grid];
            let (trained, curve) =
                fit_sig_sgd(init, &tc, &train_f, &train_y, Some((&test_f, &test_y)))?;
            let final_preds = predict_sig(&trained, &features)?;
            (ModelArtifact::Sig(trained), curve, initial_preds, final_preds)
        }
    };

    let metrics = Metrics {
        initial_train_wmse: loss_over(&initial_preds, targets, weights, grid, train_idx),
        initial_test_wmse: loss_over(&initial_preds, targets, weights, grid, test_idx),
        final_train_wmse: loss_over(&final_preds, targets, weights, grid, train_idx),
        final_test_wmse: loss_over(&final_preds, targets, weights, grid, test_idx),
        zero_baseline_train_wmse: zero_loss_over(targets, weights, grid, train_idx),
        zero_baseline_test_wmse: zero_loss_over(targets, weights, grid, test_idx),
        runtime_seconds: started.elapsed().as_secs_f64(),
        seed: cfg.seed,
    };

    write_json(&out_dir.join("config.json"), cfg)?;
    write_loss_curve(&out_dir.join("loss_curve.csv"), &curve)?;
    write_json(&out_dir.join("model.json"), &artifact)?;
    write_predictions(&out_dir.join("predictions.csv"), batch, targets, &final_preds, weights)?;
    write_json(&out_dir.join("metrics.json"), &metrics)?;
    Ok(metrics)
}

/// Reloads a run directory (config.json and model.json) and recomputes the
/// losses of the stored model from scratch.
pub fn evaluate_experiment(dir: &Path) -> Result<EvalReport> {
    let cfg: ExperimentConfig = read_json(&dir.join("config.json"))?;
    let artifact: ModelArtifact = read_json(&dir.join("model.json"))?;
    let prepared = prepare(&cfg)?;
    let Prepared { batch, targets, weights, train_idx, test_idx } = &prepared;
    let preds = match &artifact {
        ModelArtifact::Fnn(params) => fnn_predictions(params, batch)?,
        ModelArtifact::Sig(model) => {
            let streams: Vec<_> = (0..cfg.m)
                .map(|m| signature_stream(time_augment(batch.path(m)).view(), cfg.n_sig))
                .collect::<Result<_>>()?;
            let features = sig_features(&streams, cfg.n_sig, Some(weights))?;
            predict_sig(model, &features)?
        }
    };
    Ok(EvalReport {
        train_wmse: loss_over(&preds, targets, weights, cfg.k, train_idx),
        test_wmse: loss_over(&preds, targets, weights, cfg.k, test_idx),
        zero_baseline_train_wmse: zero_loss_over(targets, weights, cfg.k, train_idx),
        zero_baseline_test_wmse: zero_loss_over(targets, weights, cfg.k, test_idx),
        n_train: train_idx.len(),
        n_test: test_idx.len(),
    })
}

/// Derives the figure inputs from a completed bundle: `figure_a.csv`
/// (long-format loss curves, columns epoch,series,loss) and `figure_b.csv`
/// (the first three test paths with target and prediction, columns
/// sample,t,x,target,prediction).  Re-emission from the same bundle is
/// byte-identical.
pub fn emit_figure_data(dir: &Path) -> Result<()> {
    let cfg: ExperimentConfig = read_json(&dir.join("config.json"))?;
    let curve = read_loss_curve(&dir.join("loss_curve.csv"))?;
    let predictions = read_predictions(&dir.join("predictions.csv"), cfg.m, cfg.k)?;

    let mut a = String::from("epoch,series,loss\n");
    let mut test_iter = curve.test.iter().peekable();
    for (i, loss) in curve.train.iter().enumerate() {
        let epoch = i + 1;
        a.push_str(&format!("{epoch},train,{}\n", format_f64(*loss)));
        while test_iter.peek().is_some_and(|(e, _)| *e == epoch) {
            let (e, l) = test_iter.next().unwrap();
            a.push_str(&format!("{e},test,{}\n", format_f64(*l)));
        }
    }
    write_bytes(&dir.join("figure_a.csv"), a.as_bytes())?;

    let (_, test_idx) = split_indices(cfg.m, cfg.seed);
    if test_idx.len() < 3 {
        return Err(Error::Domain(format!(
            "figure needs 3 test samples, split has {}",
            test_idx.len()
        )));
    }
    let batch = sample_bm(cfg.m, cfg.k, cfg.t, cfg.seed)?;
    let mut b = String::from("sample,t,x,target,prediction\n");
    for &m in &test_idx[..3] {
        let view = batch.path(m);
        for j in 0..cfg.k {
            let (target, prediction) = predictions[m * cfg.k + j];
            b.push_str(&format!(
                "{m},{},{},{},{}\n",
                format_f64(view.times[j]),
                format_f64(view.value(j)[0]),
                format_f64(target),
                format_f64(prediction)
            ));
        }
    }
    write_bytes(&dir.join("figure_b.csv"), b.as_bytes())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::file_format(path, format!("write failed: {e}")))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::file_format(path, format!("cannot read: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::file_format(path, format!("bad JSON: {e}")))
}

fn write_loss_curve(path: &Path, curve: &LossCurve) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::file_format(path, format!("cannot create: {e}")))?;
    let mut w = std::io::BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "epoch,train_loss,test_loss")?;
        let mut test_iter = curve.test.iter().peekable();
        for (i, loss) in curve.train.iter().enumerate() {
            let epoch = i + 1;
            let test_field = if test_iter.peek().is_some_and(|(e, _)| *e == epoch) {
                format_f64(test_iter.next().unwrap().1)
            } else {
                String::new()
            };
            writeln!(w, "{epoch},{},{test_field}", format_f64(*loss))?;
        }
        Ok(())
    };
    emit().map_err(|e| Error::file_format(path, format!("write failed: {e}")))
}

fn read_loss_curve(path: &Path) -> Result<LossCurve> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::file_format(path, format!("cannot read: {e}")))?;
    let (header, rows) = read_csv_lines(file)
        .map_err(|e| Error::file_format(path, format!("read failed: {e}")))?;
    if header != ["epoch", "train_loss", "test_loss"] {
        return Err(Error::file_format(path, format!("unexpected header {header:?}")));
    }
    let mut curve = LossCurve::default();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 3 {
            return Err(Error::file_format(path, format!("line {}: expected 3 fields", i + 2)));
        }
        let epoch = parse_usize(&row[0], i + 2).map_err(|m| Error::file_format(path, m))?;
        let train = parse_f64(&row[1], i + 2).map_err(|m| Error::file_format(path, m))?;
        curve.train.push(train);
        if !row[2].trim().is_empty() {
            let test = parse_f64(&row[2], i + 2).map_err(|m| Error::file_format(path, m))?;
            curve.test.push((epoch, test));
        }
    }
    Ok(curve)
}

fn write_predictions(
    path: &Path,
    batch: &PathBatch,
    targets: &[f64],
    preds: &[f64],
    weights: &[f64],
) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::file_format(path, format!("cannot create: {e}")))?;
    let mut w = std::io::BufWriter::new(file);
    let grid = batch.grid_len();
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "sample,k,t,target,prediction,weight")?;
        for m in 0..batch.len() {
            let view = batch.path(m);
            let weight = format_f64(weights[m]);
            for j in 0..grid {
                let r = m * grid + j;
                writeln!(
                    w,
                    "{m},{j},{},{},{},{weight}",
                    format_f64(view.times[j]),
                    format_f64(targets[r]),
                    format_f64(preds[r])
                )?;
            }
        }
        Ok(())
    };
    emit().map_err(|e| Error::file_format(path, format!("write failed: {e}")))
}

/// (target, prediction) per (sample, grid point), as stored on disk.
fn read_predictions(path: &Path, m: usize, k: usize) -> Result<Vec<(f64, f64)>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::file_format(path, format!("cannot read: {e}")))?;
    let (header, rows) = read_csv_lines(file)
        .map_err(|e| Error::file_format(path, format!("read failed: {e}")))?;
    if header != ["sample", "k", "t", "target", "prediction", "weight"] {
        return Err(Error::file_format(path, format!("unexpected header {header:?}")));
    }
    if rows.len() != m * k {
        return Err(Error::file_format(
            path,
            format!("{} rows for {m} samples × {k} grid points", rows.len()),
        ));
    }
    let mut out = Vec::with_capacity(m * k);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 6 {
            return Err(Error::file_format(path, format!("line {}: expected 6 fields", i + 2)));
        }
        let sample = parse_usize(&row[0], i + 2).map_err(|msg| Error::file_format(path, msg))?;
        let grid_k = parse_usize(&row[1], i + 2).map_err(|msg| Error::file_format(path, msg))?;
        if sample * k + grid_k != i {
            return Err(Error::file_format(path, format!("line {}: rows out of order", i + 2)));
        }
        let target = parse_f64(&row[3], i + 2).map_err(|msg| Error::file_format(path, msg))?;
        let pred = parse_f64(&row[4], i + 2).map_err(|msg| Error::file_format(path, msg))?;
        out.push((target, pred));
    }
    Ok(out)
}
