//! Path norms and the weights they induce: Hölder seminorms, p-variation,
//! the (p,α)-norm of a signature stream, and ψ(x) = exp(β‖x‖^γ).
//!
//!     cargo run --example path_norms

use sigpath::error::Result;
use sigpath::path::{
    holder_seminorm, p_variation, sample_bm, weight_of, NormKind, WeightSpec,
};
use sigpath::signature::{pvar_alpha_norm, signature_stream, time_augment};

fn main() -> Result<()> {
    let alpha = 0.4;
    let p = 2.1;
    let batch = sample_bm(6, 100, 1.0, 42)?;

    println!("six Brownian paths on a 100-point grid:");
    println!("{:>8} {:>12} {:>12} {:>12}", "path", "holder_0.4", "pvar_2.1", "(p,a)-norm");
    for m in 0..batch.len() {
        let view = batch.path(m);
        let holder = holder_seminorm(view, alpha);
        let pvar = p_variation(view, p)?;
        let stream = signature_stream(time_augment(view).view(), 2)?;
        let pa = pvar_alpha_norm(&stream, p, alpha)?;
        println!("{m:>8} {holder:>12.5} {pvar:>12.5} {pa:>12.5}");
    }

    let holder_spec = WeightSpec::new(alpha, p, 0.01, 3.0, NormKind::HolderPath)?;
    let lift_spec = WeightSpec::new(alpha, p, 0.01, 3.0, NormKind::CcPvarAlpha)?;
    println!("\nweights ψ(x) = exp(0.01·‖x‖³) under both norms:");
    println!("{:>8} {:>14} {:>14}", "path", "holder_based", "lift_based");
    for m in 0..batch.len() {
        let view = batch.path(m);
        let w_holder = weight_of(view, &holder_spec, None)?;
        let stream = signature_stream(time_augment(view).view(), 2)?;
        let w_lift = weight_of(view, &lift_spec, Some(&stream))?;
        println!("{m:>8} {w_holder:>14.6} {w_lift:>14.6}");
    }

    println!("\nscaling one path by factors 1, 2, 4 (weights grow with the norm):");
    let base = batch.path(0);
    for scale in [1.0, 2.0, 4.0] {
        let values: Vec<f64> = base.values.iter().map(|v| v * scale).collect();
        let scaled = sigpath::path::DiscretePath::new(base.times.to_vec(), values, 1)?;
        let w = weight_of(scaled.view(), &holder_spec, None)?;
        println!("  scale {scale}: ψ = {w:.6}");
    }
    Ok(())
}
