//! Acceptance suite: one test per criterion, each printing a single
//! [PASS]/[FAIL] line (run with --nocapture to see the lines as they pass).
//!
//! The desk-scale reproduction (criterion 10) trains all four experiment
//! cells at M = 2000 and takes the bulk of the runtime; every other
//! criterion finishes in seconds.  Test names are numbered so the default
//! alphabetical order runs the cheap checks first.

use std::time::Instant;

use sigpath::experiment::{run_experiment, ExperimentConfig, Metrics, ModelId, TargetId};
use sigpath::fnn::{fnn_forward, fnn_grad, weighted_mse, Dataset, FnnParams};
use sigpath::kernel::{goursat_kernel, gp_sample_prior, truncated_kernel, KernelSpec};
use sigpath::path::{p_variation, sample_bm, DiscretePath, PathView};
use sigpath::regression::FeatureMatrix;
use sigpath::signature::{signature, signature_stream, time_augment};
use sigpath::tensor::{factorial, shuffle, tensor_mul, word_index, words, TruncatedTensor};

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

fn check(criterion: &str, cond: bool, detail: &str) {
    assert!(cond, "[FAIL] {criterion}: {detail}");
}

/// Final-test-over-baseline bounds for criterion 10(b), frozen from the
/// reference baseline run recorded in README.md.  Three cells keep the
/// default 0.5 bound; the (f2, sig) cell is pinned against its measured
/// baseline ratio.
fn test_over_baseline_bound(target: TargetId, model: ModelId) -> f64 {
    match (target, model) {
        (TargetId::F2, ModelId::Sig) => 0.35,
        _ => 0.5,
    }
}

#[test]
fn c01_shuffle_identity() {
    let criterion = "shuffle identity";
    let started = Instant::now();
    let level = 7;
    let dim = 2;
    let all_words = words(dim, level);
    let mut pairs = Vec::new();
    for i in &all_words {
        for j in &all_words {
            if i.len() + j.len() <= level {
                pairs.push((i.clone(), j.clone(), shuffle(i, j)));
            }
        }
    }

    let batch = sample_bm(50, 100, 1.0, 101).unwrap();
    let mut worst = 0.0f64;
    for m in 0..batch.len() {
        let sig = signature(time_augment(batch.path(m)).view(), level).unwrap();
        for (i, j, product) in &pairs {
            let lhs = sig.get(i).unwrap() * sig.get(j).unwrap();
            let rhs = product.pair(&sig).unwrap();
            let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
            worst = worst.max(rel);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    check(criterion, worst <= 1e-9, &format!("worst relative error {worst:.3e} > 1e-9"));
    check(criterion, elapsed <= 60.0, &format!("took {elapsed:.1}s > 60s"));
    println!(
        "[PASS] {criterion}: {} word pairs x 50 paths, worst rel err {worst:.2e}, {elapsed:.1}s"
    , pairs.len());
}

#[test]
fn c02_chen_relation() {
    let criterion = "Chen relation";
    let level = 6;
    let batch = sample_bm(20, 100, 1.0, 202).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(203);
    let mut worst = 0.0f64;
    for m in 0..batch.len() {
        let lifted = time_augment(batch.path(m));
        let view = lifted.view();
        let full = signature(view, level).unwrap();
        for _ in 0..10 {
            let u = rng.gen_range(1..view.len() - 1);
            let left = PathView {
                times: &view.times[..=u],
                values: &view.values[..(u + 1) * view.dim],
                dim: view.dim,
            };
            let right = PathView {
                times: &view.times[u..],
                values: &view.values[u * view.dim..],
                dim: view.dim,
            };
            let glued =
                tensor_mul(&signature(left, level).unwrap(), &signature(right, level).unwrap())
                    .unwrap();
            for (a, b) in glued.coeffs().iter().zip(full.coeffs()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(criterion, worst <= 1e-10, &format!("worst coefficient error {worst:.3e} > 1e-10"));
    println!("[PASS] {criterion}: 20 paths x 10 splits at level {level}, worst err {worst:.2e}");
}

#[test]
fn c03_time_component_identity() {
    let criterion = "time-component identity";
    let level = 7;
    let batch = sample_bm(5, 100, 1.0, 303).unwrap();
    let mut worst = 0.0f64;
    for m in 0..batch.len() {
        let stream = signature_stream(time_augment(batch.path(m)).view(), level).unwrap();
        for j in 0..stream.len() {
            let t = stream.times()[j];
            let element = stream.element(j);
            for k in 1..=level {
                let got = element.get(&vec![0u8; k]).unwrap();
                let want = t.powi(k as i32) / factorial(k);
                worst = worst.max((got - want).abs());
            }
        }
    }
    check(criterion, worst <= 1e-10, &format!("worst error {worst:.3e} > 1e-10"));
    println!(
        "[PASS] {criterion}: <e_0^k> = t^k/k! for k <= 7 at all grid points, worst err {worst:.2e}"
    );
}

#[test]
fn c04_integral_feature_identity() {
    let criterion = "integral feature identity";
    let batch = sample_bm(10, 100, 1.0, 404).unwrap();
    let mut worst = 0.0f64;
    for m in 0..batch.len() {
        let view = batch.path(m);
        let stream = signature_stream(time_augment(view).view(), 2).unwrap();
        let mut exact = 0.0;
        for j in 0..view.len() {
            if j > 0 {
                let dt = view.times[j] - view.times[j - 1];
                exact += 0.5 * (view.value(j)[0] + view.value(j - 1)[0]) * dt;
            }
            let got = stream.element(j).get(&[1, 0]).unwrap();
            worst = worst.max((got - exact).abs());
        }
    }
    check(criterion, worst <= 1e-8, &format!("worst error {worst:.3e} > 1e-8"));
    println!("[PASS] {criterion}: <e_(1,0)> matches the piecewise-linear integral, worst err {worst:.2e}");
}

fn exhaustive_pvar(view: PathView<'_>, p: f64) -> f64 {
    let n = view.len();
    let interior = n - 2;
    let mut best = 0.0f64;
    for mask in 0u32..1 << interior {
        let mut prev = 0usize;
        let mut acc = 0.0;
        for b in 0..interior {
            if mask >> b & 1 == 1 {
                acc += view.dist(prev, b + 1).powf(p);
                prev = b + 1;
            }
        }
        acc += view.dist(prev, n - 1).powf(p);
        best = best.max(acc);
    }
    best.powf(1.0 / p)
}

#[test]
fn c05_p_variation_oracle() {
    let criterion = "p-variation oracle";
    let batch = sample_bm(100, 10, 1.0, 505).unwrap();
    let mut worst = 0.0f64;
    for m in 0..batch.len() {
        let view = batch.path(m);
        for p in [1.0, 2.1, 3.0] {
            let dp = p_variation(view, p).unwrap();
            let brute = exhaustive_pvar(view, p);
            worst = worst.max((dp - brute).abs());
        }
    }
    check(criterion, worst <= 1e-10, &format!("worst error {worst:.3e} > 1e-10"));
    println!("[PASS] {criterion}: DP matches exhaustive partitions on 100 paths, worst err {worst:.2e}");
}

#[test]
fn c06_fnn_gradient_check() {
    let criterion = "FNN gradient check";
    let batch = sample_bm(8, 20, 1.0, 606).unwrap();
    let mut targets = Vec::new();
    for m in 0..8 {
        let view = batch.path(m);
        let mut best = f64::NEG_INFINITY;
        for j in 0..view.len() {
            best = best.max(view.value(j)[0]);
            targets.push(best);
        }
    }
    let weights: Vec<f64> = (0..8).map(|m| 1.0 + 0.1 * m as f64).collect();
    let data = Dataset::new(batch, targets, weights).unwrap();

    let params = FnnParams::init(6, 5, 1, true, 607);
    let (_, grad) = fnn_grad(&params, &data).unwrap();
    let ranges = params.class_ranges();
    let mut picks = Vec::new();
    for range in &ranges {
        let len = range.end - range.start;
        for offset in 0..len.min(5) {
            picks.push(range.start + offset * (len / 5).max(1));
        }
    }
    picks.sort_unstable();
    picks.dedup();
    check(criterion, picks.len() >= 20, &format!("only {} parameters picked", picks.len()));

    let h = 1e-5;
    let flat = params.to_flat();
    let mut worst = 0.0f64;
    for &idx in &picks {
        let mut plus = flat.clone();
        plus[idx] += h;
        let mut minus = flat.clone();
        minus[idx] -= h;
        let mut p_plus = params.clone();
        p_plus.assign_from_flat(&plus).unwrap();
        let mut p_minus = params.clone();
        p_minus.assign_from_flat(&minus).unwrap();
        let fd = (weighted_mse(&p_plus, &data).unwrap() - weighted_mse(&p_minus, &data).unwrap())
            / (2.0 * h);
        let rel = (grad[idx] - fd).abs() / grad[idx].abs().max(fd.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    check(criterion, worst <= 1e-5, &format!("worst relative error {worst:.3e} > 1e-5"));
    println!(
        "[PASS] {criterion}: {} parameters across all classes, worst rel err {worst:.2e}",
        picks.len()
    );
}

#[test]
fn c07_non_anticipativity() {
    let criterion = "non-anticipativity";
    let mut rng = ChaCha12Rng::seed_from_u64(707);
    let k = 25;
    let mut cases = 0;
    for case in 0..100u64 {
        let spatial = case % 2 == 0;
        let params = FnnParams::init(4 + (case % 3) as usize, 4, 1, spatial, 7000 + case);
        let batch = sample_bm(2, k, 1.0, 7100 + case).unwrap();
        let base = batch.path(0);
        let other = batch.path(1);
        let cut = rng.gen_range(1..k - 1);

        let mut spliced = base.values.to_vec();
        for j in cut + 1..k {
            spliced[j] = other.values[j];
        }
        let variant = DiscretePath::new(base.times.to_vec(), spliced, 1).unwrap();

        let pred_base = fnn_forward(&params, base).unwrap();
        let pred_variant = fnn_forward(&params, variant.view()).unwrap();
        for j in 0..=cut {
            check(
                criterion,
                pred_base[j] == pred_variant[j],
                &format!("case {case}: prediction at grid point {j} changed with the future"),
            );
        }
        check(
            criterion,
            pred_base[k - 1] != pred_variant[k - 1],
            &format!("case {case}: perturbation did not reach the final prediction"),
        );
        cases += 1;
    }
    println!("[PASS] {criterion}: bit-exact prefix invariance in {cases} spliced cases");
}

#[test]
fn c08_goursat_vs_truncated() {
    let criterion = "Goursat vs truncated kernel";
    let level = 12;
    let grid = 200;
    let spec = KernelSpec::constant_one(level);

    let raw = sample_bm(8, grid, 1.0, 808).unwrap();
    let mut paths = Vec::new();
    for m in 0..4 {
        let a = raw.path(2 * m);
        let b = raw.path(2 * m + 1);
        let mut values = Vec::with_capacity(grid * 2);
        for j in 0..grid {
            values.push(a.values[j]);
            values.push(b.values[j]);
        }
        let mut tv = 0.0;
        for j in 1..grid {
            let dx = values[2 * j] - values[2 * j - 2];
            let dy = values[2 * j + 1] - values[2 * j - 1];
            tv += (dx * dx + dy * dy).sqrt();
        }
        let scale = 0.8 / tv;
        for v in &mut values {
            *v *= scale;
        }
        let path = DiscretePath::new(a.times.to_vec(), values, 2).unwrap();
        let mut tv_scaled = 0.0;
        for j in 1..grid {
            tv_scaled += path.view().dist(j - 1, j);
        }
        check(criterion, tv_scaled <= 1.0, &format!("path {m} has total variation {tv_scaled}"));
        paths.push(path);
    }

    let sigs: Vec<TruncatedTensor> =
        paths.iter().map(|p| signature(p.view(), level).unwrap()).collect();
    let mut worst = 0.0f64;
    for (i, j) in [(0, 1), (0, 2), (1, 2), (2, 3), (0, 3), (3, 3)] {
        let truncated = truncated_kernel(&spec, &sigs[i], &sigs[j]).unwrap();
        let goursat = goursat_kernel(paths[i].view(), paths[j].view(), 1).unwrap();
        let rel = (truncated - goursat).abs() / goursat.abs();
        worst = worst.max(rel);
    }
    check(criterion, worst <= 1e-6, &format!("worst relative error {worst:.3e} > 1e-6"));
    println!("[PASS] {criterion}: 6 pairs on a {grid}-point grid at level {level}, worst rel err {worst:.2e}");
}

#[test]
fn c09_gp_random_series() {
    let criterion = "GP random series covariance";
    let level = 3;
    let spec = KernelSpec::new(vec![1.0, 0.8, 0.5, 0.3]).unwrap();
    let batch = sample_bm(10, 40, 1.0, 909).unwrap();
    let sigs: Vec<TruncatedTensor> = (0..10)
        .map(|m| signature(time_augment(batch.path(m)).view(), level).unwrap())
        .collect();
    let refs: Vec<&TruncatedTensor> = sigs.iter().collect();
    let features = FeatureMatrix::from_tensors(&refs, level, None).unwrap();

    let n = 10_000;
    let samples = gp_sample_prior(&spec, &features, n, 910).unwrap();
    let pairs = [(0, 1), (2, 3), (4, 5), (6, 7), (8, 9), (0, 9), (1, 8), (2, 7), (3, 6), (4, 4)];
    let mut detail = String::new();
    for (i, j) in pairs {
        let want = truncated_kernel(&spec, &sigs[i], &sigs[j]).unwrap();
        let mut mean = 0.0;
        for draw in &samples {
            mean += draw[i] * draw[j];
        }
        mean /= n as f64;
        let mut var = 0.0;
        for draw in &samples {
            let d = draw[i] * draw[j] - mean;
            var += d * d;
        }
        let se = (var / (n as f64 * (n - 1) as f64)).sqrt();
        let dev = (mean - want).abs();
        detail = format!("pair ({i},{j}): |{mean:.4} - {want:.4}| = {dev:.4} vs 3 SE = {:.4}", 3.0 * se);
        check(criterion, dev <= 3.0 * se, &detail);
    }
    println!("[PASS] {criterion}: 10 pairs within 3 Monte-Carlo SEs over {n} samples (last: {detail})");
}

fn run_desk_cell(target: TargetId, model: ModelId) -> Metrics {
    let cfg = ExperimentConfig { target, model, ..ExperimentConfig::desk_scale() };
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, dir.path()).unwrap()
}

#[test]
fn c10_desk_scale_reproduction() {
    let criterion = "desk-scale reproduction";
    let cells = [
        (TargetId::F1, ModelId::Fnn, "f1 fnn"),
        (TargetId::F2, ModelId::Fnn, "f2 fnn"),
        (TargetId::F1, ModelId::Sig, "f1 sig"),
        (TargetId::F2, ModelId::Sig, "f2 sig"),
    ];
    for (target, model, name) in cells {
        let metrics = run_desk_cell(target, model);
        let bound = test_over_baseline_bound(target, model);
        let drop = metrics.final_train_wmse / metrics.initial_train_wmse;
        let vs_baseline = metrics.final_test_wmse / metrics.zero_baseline_test_wmse;
        let vs_train = metrics.final_test_wmse / metrics.final_train_wmse;
        println!(
            "  cell {name}: train {:.5} -> {:.5} ({drop:.3}x), test {:.5} = {vs_baseline:.3}x baseline, test/train {vs_train:.2}, {:.0}s",
            metrics.initial_train_wmse,
            metrics.final_train_wmse,
            metrics.final_test_wmse,
            metrics.runtime_seconds
        );
        check(
            criterion,
            metrics.runtime_seconds <= 1200.0,
            &format!("cell {name} took {:.0}s > 20 min", metrics.runtime_seconds),
        );
        check(
            criterion,
            drop < 0.5,
            &format!("cell {name}: train loss dropped only to {drop:.3}x initial"),
        );
        check(
            criterion,
            vs_baseline <= bound,
            &format!("cell {name}: test loss at {vs_baseline:.3}x baseline exceeds {bound}"),
        );
        check(
            criterion,
            vs_train <= 2.0,
            &format!("cell {name}: test loss at {vs_train:.2}x train loss"),
        );
    }
    println!("[PASS] {criterion}: all four cells meet the train-drop, baseline, and overfit bounds");
}

#[test]
fn c11_determinism() {
    let criterion = "determinism";
    for model in [ModelId::Fnn, ModelId::Sig] {
        let cfg = ExperimentConfig {
            m: 200,
            k: 60,
            epochs: 120,
            test_every: 30,
            batch_size: 50,
            lr: 1e-3,
            n_fnn: 10,
            n1: 8,
            n_sig: 4,
            seed: 11,
            model,
            target: TargetId::F2,
            ..ExperimentConfig::desk_scale()
        };
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut a = run_experiment(&cfg, dir_a.path()).unwrap();
        let mut b = run_experiment(&cfg, dir_b.path()).unwrap();
        a.runtime_seconds = 0.0;
        b.runtime_seconds = 0.0;
        check(criterion, a == b, &format!("{model:?} metrics differ between reruns"));
        for name in ["config.json", "loss_curve.csv", "model.json", "predictions.csv"] {
            let bytes_a = std::fs::read(dir_a.path().join(name)).unwrap();
            let bytes_b = std::fs::read(dir_b.path().join(name)).unwrap();
            check(criterion, bytes_a == bytes_b, &format!("{model:?} {name} differs between reruns"));
        }
    }
    println!("[PASS] {criterion}: reruns reproduce metrics and artifacts bit for bit");
}
