//! Training a functional input network on the running maximum of Brownian
//! paths, with Hölder-norm weights.
//!
//!     cargo run --release --example fnn_training

use sigpath::error::Result;
use sigpath::fnn::{fnn_forward, weighted_mse, Dataset, FnnParams};
use sigpath::optim::TrainConfig;
use sigpath::path::{sample_bm, weight_of, NormKind, WeightSpec};
use sigpath::{experiment::target_values, experiment::TargetId, fnn::train_fnn};

fn main() -> Result<()> {
    let m = 200;
    let k = 50;
    let batch = sample_bm(m, k, 1.0, 11)?;
    let spec = WeightSpec::new(0.4, 2.1, 0.01, 3.0, NormKind::HolderPath)?;

    let mut targets = Vec::with_capacity(m * k);
    let mut weights = Vec::with_capacity(m);
    for i in 0..m {
        targets.extend(target_values(TargetId::F1, batch.path(i))?);
        weights.push(weight_of(batch.path(i), &spec, None)?);
    }
    let dataset = Dataset::new(batch, targets, weights)?;

    let params = FnnParams::init(20, 15, 1, true, 5);
    println!("network with {} parameters", params.n_params());
    println!("initial weighted MSE: {:.6}", weighted_mse(&params, &dataset)?);
    println!("zero-prediction baseline: {:.6}", dataset.zero_baseline());

    let cfg = TrainConfig { lr: 1e-3, batch_size: 50, epochs: 60, test_every: 10, seed: 1 };
    let (trained, curve) = train_fnn(params, &cfg, &dataset, None)?;
    for (i, loss) in curve.train.iter().enumerate() {
        if (i + 1) % 10 == 0 {
            println!("epoch {:>3}: train loss {loss:.6}", i + 1);
        }
    }
    println!("final weighted MSE: {:.6}", weighted_mse(&trained, &dataset)?);

    let probe = dataset.batch.path(0);
    let preds = fnn_forward(&trained, probe)?;
    println!("\nfirst path, every 10th grid point:");
    println!("{:>8} {:>12} {:>12}", "t", "target", "prediction");
    for j in (0..k).step_by(10) {
        let target = dataset.targets[j];
        println!("{:>8.3} {target:>12.5} {:>12.5}", probe.times[j], preds[j]);
    }
    Ok(())
}
