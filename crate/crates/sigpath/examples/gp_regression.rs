//! Gaussian-process regression with the truncated signature kernel:
//! prior samples, a fit on terminal functionals, and posterior coverage.
//!
//!     cargo run --release --example gp_regression

use sigpath::error::Result;
use sigpath::experiment::{split_indices, target_values, TargetId};
use sigpath::kernel::{gp_fit, gp_sample_prior, KernelSpec};
use sigpath::path::sample_bm;
use sigpath::regression::FeatureMatrix;
use sigpath::signature::{signature, time_augment};

fn main() -> Result<()> {
    let m = 80;
    let level = 4;
    let batch = sample_bm(m, 50, 1.0, 99)?;

    let sigs: Vec<_> = (0..m)
        .map(|i| signature(time_augment(batch.path(i)).view(), level))
        .collect::<Result<_>>()?;
    let refs: Vec<_> = sigs.iter().collect();
    let features = FeatureMatrix::from_tensors(&refs, level, None)?;

    let spec = KernelSpec::new((0..=level).map(|k| 0.8f64.powi(k as i32)).collect())?;
    let prior = gp_sample_prior(&spec, &features, 3, 7)?;
    println!("three prior draws, first five paths:");
    for (s, draw) in prior.iter().enumerate() {
        let head: Vec<String> = draw[..5].iter().map(|v| format!("{v:>8.4}")).collect();
        println!("  draw {s}: {}", head.join(" "));
    }

    let mut targets = Vec::with_capacity(m);
    for i in 0..m {
        let values = target_values(TargetId::F1, batch.path(i))?;
        targets.push(*values.last().unwrap());
    }

    let (train_idx, test_idx) = split_indices(m, 4);
    let train_f = features.select(&train_idx)?;
    let test_f = features.select(&test_idx)?;
    let train_y: Vec<f64> = train_idx.iter().map(|&i| targets[i]).collect();

    let sigma2 = 1e-4;
    let posterior = gp_fit(&train_f, &train_y, &spec, sigma2)?;
    let (mean, variance) = posterior.predict(&spec, &test_f)?;

    let mut sq = 0.0;
    let mut covered = 0;
    println!("\nposterior on the {} test paths:", test_idx.len());
    println!("{:>8} {:>12} {:>12} {:>12}", "path", "target", "mean", "std");
    for (row, &i) in test_idx.iter().enumerate() {
        let err = targets[i] - mean[row];
        sq += err * err;
        let std = variance[row].sqrt();
        if err.abs() <= 2.0 * (variance[row] + sigma2).sqrt() {
            covered += 1;
        }
        if row < 8 {
            println!("{i:>8} {:>12.5} {:>12.5} {std:>12.5}", targets[i], mean[row]);
        }
    }
    println!(
        "\nrmse {:.5}, {covered}/{} targets inside two posterior standard deviations",
        (sq / test_idx.len() as f64).sqrt(),
        test_idx.len()
    );
    Ok(())
}
