//! The signature kernel two ways: summing truncated signature features
//! against solving the Goursat equation on the path grid.
//!
//!     cargo run --release --example signature_kernel

use sigpath::error::Result;
use sigpath::kernel::{goursat_kernel, truncated_kernel, KernelSpec};
use sigpath::path::sample_bm;
use sigpath::signature::{signature, time_augment};

fn main() -> Result<()> {
    let batch = sample_bm(4, 60, 1.0, 31)?;
    let scale = 0.3;
    let lifted: Vec<_> = (0..batch.len())
        .map(|m| {
            let view = batch.path(m);
            let values: Vec<f64> = view.values.iter().map(|v| v * scale).collect();
            let damped = sigpath::path::DiscretePath::new(view.times.to_vec(), values, 1)?;
            Ok(time_augment(damped.view()))
        })
        .collect::<Result<_>>()?;

    let level = 10;
    let spec = KernelSpec::constant_one(level);
    let sigs: Vec<_> = lifted
        .iter()
        .map(|p| signature(p.view(), level))
        .collect::<Result<_>>()?;

    println!("truncated (level {level}) vs Goursat solver, pairwise:");
    println!("{:>6} {:>16} {:>16} {:>12}", "pair", "truncated", "goursat", "rel err");
    for i in 0..lifted.len() {
        for j in i..lifted.len() {
            let t = truncated_kernel(&spec, &sigs[i], &sigs[j])?;
            let g = goursat_kernel(lifted[i].view(), lifted[j].view(), 2)?;
            let rel = (t - g).abs() / g.abs();
            println!("{:>6} {t:>16.10} {g:>16.10} {rel:>12.2e}", format!("({i},{j})"));
        }
    }

    println!("\nGoursat refinement on pair (0,1):");
    for refine in [1, 2, 4, 8] {
        let g = goursat_kernel(lifted[0].view(), lifted[1].view(), refine)?;
        println!("  refine {refine}: {g:.12}");
    }

    let decayed = KernelSpec::with_growth(
        (0..=level).map(|k| 0.5f64.powi(k as i32)).collect(),
        1.0,
        0.0,
    )?;
    let v = truncated_kernel(&decayed, &sigs[0], &sigs[1])?;
    println!("\ngeometrically decaying coefficients a_k = 2^-k: k(x,y) = {v:.10}");
    Ok(())
}
