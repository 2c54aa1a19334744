//! Command-line front end for the library: data generation, experiment
//! training and evaluation, Gram matrices, Gaussian-process regression,
//! and figure-data emission.
//!
//! Exit codes: 0 on success, 1 on numeric failure inside training, 2 on
//! configuration or file errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use sigpath::error::{Error, Result};
use sigpath::experiment::{
    emit_figure_data, evaluate_experiment, run_experiment, split_indices, target_values,
    ExperimentConfig, ModelId, TargetId,
};
use sigpath::kernel::{goursat_kernel, gp_fit_predict, truncated_kernel, KernelSpec};
use sigpath::path::{load_paths_csv, sample_bm, save_paths_csv, DiscretePath, PathBatch};
use sigpath::regression::FeatureMatrix;
use sigpath::signature::{signature, time_augment};

#[derive(Parser)]
#[command(name = "sigpath", version, about = "Path functionals on weighted path spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample Brownian paths on a uniform grid and write them to CSV.
    Generate(GenerateArgs),
    /// Train one experiment cell and write its artifact bundle.
    Train(TrainArgs),
    /// Recompute the losses of a stored run directory.
    Evaluate(DirArgs),
    /// Write the Gram matrix of a path CSV under the signature kernel.
    Kernel(KernelArgs),
    /// Gaussian-process regression on terminal signatures.
    Gp(GpArgs),
    /// Derive figure_a.csv and figure_b.csv from a completed run.
    Figures(DirArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of paths.
    #[arg(long, default_value_t = 2000)]
    m: usize,
    /// Grid points per path.
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Time horizon.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (sample,t,x1).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON file supplying any subset of the configuration fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the full-size path count (50000) instead of the desk default.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n_sig: Option<usize>,
    #[arg(long)]
    n_fnn: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    test_every: Option<usize>,
    /// Target functional: f1 (running maximum) or f2 (clipped average).
    #[arg(long)]
    target: Option<String>,
    /// Model family: fnn or sig.
    #[arg(long)]
    model: Option<String>,
    /// Output directory for the artifact bundle.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DirArgs {
    /// Run directory holding the artifact bundle.
    #[arg(long)]
    dir: PathBuf,
}

#[derive(Args)]
struct KernelArgs {
    /// Input path CSV (sample,t,x1,...).
    #[arg(long)]
    paths: PathBuf,
    /// Kernel description JSON; defaults to unit coefficients at --level.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Truncation level when no spec file is given.
    #[arg(long, default_value_t = 5)]
    level: usize,
    /// Solve the kernel equation on the raw paths instead of truncating.
    #[arg(long)]
    goursat: bool,
    /// Grid refinement for the solver.
    #[arg(long, default_value_t = 1)]
    refine: usize,
    /// Output CSV holding the Gram matrix, one row per line.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GpArgs {
    /// Input path CSV (sample,t,x1,...).
    #[arg(long)]
    paths: PathBuf,
    /// Kernel description JSON; defaults to unit coefficients at --level.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Truncation level when no spec file is given.
    #[arg(long, default_value_t = 4)]
    level: usize,
    /// Observation noise; overrides the spec file's value.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Terminal target functional: f1 or f2.
    #[arg(long, default_value = "f1")]
    target: String,
    /// Seed of the 80/20 train/test split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (sample,target,mean,variance) over the test split.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Train(args) => train(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Kernel(args) => kernel(args),
        Command::Gp(args) => gp(args),
        Command::Figures(args) => figures(args),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::file_format(path, format!("cannot read: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::file_format(path, format!("bad JSON: {e}")))
}

fn generate(args: GenerateArgs) -> Result<()> {
    let batch = sample_bm(args.m, args.k, args.t, args.seed)?;
    save_paths_csv(&batch, &args.out)?;
    println!("wrote {} paths to {}", args.m, args.out.display());
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => read_json::<ExperimentConfig>(path)?,
        None => ExperimentConfig::desk_scale(),
    };
    if args.paper_scale {
        cfg.m = ExperimentConfig::paper_scale().m;
    }
    if let Some(v) = args.m {
        cfg.m = v;
    }
    if let Some(v) = args.k {
        cfg.k = v;
    }
    if let Some(v) = args.t {
        cfg.t = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.p {
        cfg.p = v;
    }
    if let Some(v) = args.beta {
        cfg.beta = v;
    }
    if let Some(v) = args.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = args.n_sig {
        cfg.n_sig = v;
    }
    if let Some(v) = args.n_fnn {
        cfg.n_fnn = v;
    }
    if let Some(v) = args.n1 {
        cfg.n1 = v;
    }
    if let Some(v) = args.lr {
        cfg.lr = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.test_every {
        cfg.test_every = v;
    }
    if let Some(v) = &args.target {
        cfg.target = v.parse::<TargetId>()?;
    }
    if let Some(v) = &args.model {
        cfg.model = v.parse::<ModelId>()?;
    }
    let metrics = run_experiment(&cfg, &args.out)?;
    println!("{}", serde_json::to_string_pretty(&metrics)?);
    Ok(())
}

fn evaluate(args: DirArgs) -> Result<()> {
    let report = evaluate_experiment(&args.dir)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn figures(args: DirArgs) -> Result<()> {
    emit_figure_data(&args.dir)?;
    println!("wrote {}", args.dir.join("figure_a.csv").display());
    println!("wrote {}", args.dir.join("figure_b.csv").display());
    Ok(())
}

fn load_spec(path: Option<&Path>, level: usize) -> Result<KernelSpec> {
    match path {
        Some(p) => {
            let spec: KernelSpec = read_json(p)?;
            spec.validate()?;
            Ok(spec)
        }
        None => Ok(KernelSpec::constant_one(level)),
    }
}

fn lift_all(batch: &PathBatch) -> Vec<DiscretePath> {
    (0..batch.len()).map(|m| time_augment(batch.path(m))).collect()
}

fn write_matrix(path: &Path, gram: &[Vec<f64>]) -> Result<()> {
    let mut text = String::new();
    for row in gram {
        let fields: Vec<String> = row.iter().map(|v| fmt(*v)).collect();
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::file_format(path, format!("write failed: {e}")))
}

fn kernel(args: KernelArgs) -> Result<()> {
    let batch = load_paths_csv(&args.paths)?;
    let spec = load_spec(args.spec.as_deref(), args.level)?;
    let lifted = lift_all(&batch);
    let n = batch.len();
    let mut gram = vec![vec![0.0; n]; n];
    if args.goursat {
        for i in 0..n {
            for j in i..n {
                let v = goursat_kernel(lifted[i].view(), lifted[j].view(), args.refine)?;
                gram[i][j] = v;
                gram[j][i] = v;
            }
        }
    } else {
        let sigs: Vec<_> = lifted
            .iter()
            .map(|p| signature(p.view(), spec.n_sig))
            .collect::<Result<_>>()?;
        for i in 0..n {
            for j in i..n {
                let v = truncated_kernel(&spec, &sigs[i], &sigs[j])?;
                gram[i][j] = v;
                gram[j][i] = v;
            }
        }
    }
    write_matrix(&args.out, &gram)?;
    println!("wrote {n}x{n} Gram matrix to {}", args.out.display());
    Ok(())
}

fn gp(args: GpArgs) -> Result<()> {
    let batch = load_paths_csv(&args.paths)?;
    let spec = load_spec(args.spec.as_deref(), args.level)?;
    let sigma2 = args.sigma2.or(spec.sigma2).unwrap_or(1e-4);
    let target: TargetId = args.target.parse()?;

    let mut terminal = Vec::with_capacity(batch.len());
    for m in 0..batch.len() {
        let values = target_values(target, batch.path(m))?;
        terminal.push(*values.last().expect("grid is non-empty"));
    }
    let lifted = lift_all(&batch);
    let sigs: Vec<_> = lifted
        .iter()
        .map(|p| signature(p.view(), spec.n_sig))
        .collect::<Result<_>>()?;
    let refs: Vec<_> = sigs.iter().collect();
    let features = FeatureMatrix::from_tensors(&refs, spec.n_sig, None)?;

    let (train_idx, test_idx) = split_indices(batch.len(), args.seed);
    let train_f = features.select(&train_idx)?;
    let test_f = features.select(&test_idx)?;
    let train_y: Vec<f64> = train_idx.iter().map(|&m| terminal[m]).collect();
    let (mean, variance) = gp_fit_predict(&train_f, &train_y, &spec, sigma2, &test_f)?;

    let mut text = String::from("sample,target,mean,variance\n");
    let mut sq_err = 0.0;
    for (row, &m) in test_idx.iter().enumerate() {
        sq_err += (terminal[m] - mean[row]).powi(2);
        text.push_str(&format!(
            "{m},{},{},{}\n",
            fmt(terminal[m]),
            fmt(mean[row]),
            fmt(variance[row])
        ));
    }
    std::fs::write(&args.out, text)
        .map_err(|e| Error::file_format(&args.out, format!("write failed: {e}")))?;

    let summary = serde_json::json!({
        "n_train": train_idx.len(),
        "n_test": test_idx.len(),
        "sigma2": sigma2,
        "rmse": (sq_err / test_idx.len() as f64).sqrt(),
        "mean_posterior_variance": variance.iter().sum::<f64>() / variance.len() as f64,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
