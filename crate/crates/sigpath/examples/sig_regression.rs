//! Linear regression on truncated signature features: ridge in closed form
//! against stochastic gradient descent, on the clipped running average.
//!
//!     cargo run --release --example sig_regression

use sigpath::error::Result;
use sigpath::experiment::{target_values, TargetId};
use sigpath::optim::TrainConfig;
use sigpath::path::sample_bm;
use sigpath::regression::{fit_sig_ridge, fit_sig_sgd, predict_sig, sig_features, sig_mse, SigLinearModel};
use sigpath::signature::{signature_stream, time_augment};

fn main() -> Result<()> {
    let m = 150;
    let k = 40;
    let level = 3;
    let batch = sample_bm(m, k, 1.0, 23)?;

    let streams: Vec<_> = (0..m)
        .map(|i| signature_stream(time_augment(batch.path(i)).view(), level))
        .collect::<Result<_>>()?;
    let features = sig_features(&streams, level, None)?;
    println!(
        "{} paths × {} grid points → {} rows of {} signature features",
        m,
        k,
        features.n_rows(),
        features.n_cols()
    );

    let mut targets = Vec::with_capacity(m * k);
    for i in 0..m {
        targets.extend(target_values(TargetId::F2, batch.path(i))?);
    }

    let ridge = fit_sig_ridge(&features, &targets, 1e-6)?;
    let ridge_loss = sig_mse(&ridge, &features, &targets)?;
    println!("\nridge (λ = 1e-6): weighted MSE {ridge_loss:.8}");

    let cfg = TrainConfig { lr: 1e-2, batch_size: 30, epochs: 400, test_every: 100, seed: 3 };
    let init = SigLinearModel::zeros(2, level);
    let (sgd, curve) = fit_sig_sgd(init, &cfg, &features, &targets, None)?;
    let sgd_loss = sig_mse(&sgd, &features, &targets)?;
    println!("sgd after {} epochs:  weighted MSE {sgd_loss:.8}", curve.train.len());

    let preds = predict_sig(&ridge, &features)?;
    println!("\nfirst path under the ridge model, every 8th grid point:");
    println!("{:>8} {:>12} {:>12}", "t", "target", "prediction");
    for j in (0..k).step_by(8) {
        println!("{:>8.3} {:>12.5} {:>12.5}", batch.path(0).times[j], targets[j], preds[j]);
    }
    Ok(())
}
