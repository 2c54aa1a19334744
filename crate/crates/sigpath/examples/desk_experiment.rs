//! A reduced end-to-end experiment cell: Brownian data, weighted training,
//! the artifact bundle, and figure data, written under a temp directory.
//! The full desk-scale cells run through the command-line interface.
//!
//!     cargo run --release --example desk_experiment

use sigpath::error::Result;
use sigpath::experiment::{
    emit_figure_data, evaluate_experiment, run_experiment, ExperimentConfig, ModelId, TargetId,
};

fn main() -> Result<()> {
    let cfg = ExperimentConfig {
        m: 200,
        k: 50,
        epochs: 150,
        test_every: 25,
        batch_size: 50,
        lr: 1e-3,
        n_fnn: 12,
        n1: 10,
        target: TargetId::F1,
        model: ModelId::Fnn,
        ..ExperimentConfig::desk_scale()
    };

    let dir = std::env::temp_dir().join("sigpath_desk_example");
    println!("running a reduced (m = {}, {} epochs) cell into {}", cfg.m, cfg.epochs, dir.display());
    let metrics = run_experiment(&cfg, &dir)?;

    println!("\nmetrics:");
    println!("  initial train wMSE  {:.6}", metrics.initial_train_wmse);
    println!("  final   train wMSE  {:.6}", metrics.final_train_wmse);
    println!("  final   test  wMSE  {:.6}", metrics.final_test_wmse);
    println!("  zero baseline test  {:.6}", metrics.zero_baseline_test_wmse);
    println!("  runtime             {:.2}s", metrics.runtime_seconds);

    let report = evaluate_experiment(&dir)?;
    println!("\nindependent re-evaluation of the stored model:");
    println!("  train wMSE {:.6}, test wMSE {:.6}", report.train_wmse, report.test_wmse);

    emit_figure_data(&dir)?;
    println!("\nartifacts:");
    for name in [
        "config.json",
        "loss_curve.csv",
        "model.json",
        "predictions.csv",
        "metrics.json",
        "figure_a.csv",
        "figure_b.csv",
    ] {
        let len = std::fs::metadata(dir.join(name)).map(|m| m.len()).unwrap_or(0);
        println!("  {name:<16} {len:>9} bytes");
    }
    Ok(())
}
