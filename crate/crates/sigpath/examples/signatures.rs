//! Signatures of piecewise-linear paths: levels, Chen's identity, the
//! time-integral words, and a shuffle-product check.
//!
//!     cargo run --example signatures

use sigpath::error::Result;
use sigpath::path::DiscretePath;
use sigpath::signature::{signature, signature_stream, time_augment};
use sigpath::tensor::{factorial, shuffle, tensor_mul, word_index};

fn main() -> Result<()> {
    let times: Vec<f64> = (0..9).map(|k| k as f64 / 8.0).collect();
    let values: Vec<f64> = times.iter().flat_map(|t| [(3.0 * t).sin(), t * t]).collect();
    let path = DiscretePath::new(times.clone(), values, 2)?;

    let level = 5;
    let sig = signature(path.view(), level)?;
    println!("signature of a 2-d path, truncated at level {level}:");
    for n in 0..=level {
        let slice = sig.level_slice(n);
        let norm: f64 = slice.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("  level {n}: {:3} coefficients, norm {norm:.6}", slice.len());
    }

    let stream = signature_stream(path.view(), level)?;
    let split = 4;
    let left = stream.element(split);
    let right = stream.restricted(split, stream.len() - 1)?;
    let glued = tensor_mul(left, &right)?;
    let max_err = glued
        .coeffs()
        .iter()
        .zip(sig.coeffs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    println!("\nChen identity, split at grid point {split}: max coefficient error {max_err:.2e}");

    let lifted = time_augment(path.view());
    let lifted_sig = signature(lifted.view(), level)?;
    println!("\ntime-augmented path: <e_0^k> against t^k/k! at t = 1:");
    for k in 1..=4 {
        let word = vec![0u8; k];
        let idx = word_index(3, level, &word)?;
        let got = lifted_sig.coeffs()[idx];
        let want = 1.0 / factorial(k);
        println!("  k = {k}: {got:.10}  vs  {want:.10}");
    }

    let prod = shuffle(&[0, 1], &[2]);
    println!("\nshuffle e_0 e_1 ⧢ e_2:");
    for (word, mult) in prod.iter() {
        println!("  word {word:?} with multiplicity {mult}");
    }
    let lhs = lifted_sig.coeffs()[word_index(3, level, &[0, 1])?]
        * lifted_sig.coeffs()[word_index(3, level, &[2])?];
    let rhs = prod.pair(&lifted_sig)?;
    println!("  <e_01><e_2> = {lhs:.10}, shuffle sum = {rhs:.10}");
    Ok(())
}
