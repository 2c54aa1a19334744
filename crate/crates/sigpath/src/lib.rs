//! Numerical toolkit for learning functionals of paths under weighted norms.
//!
//! The pieces, bottom up:
//!
//! * [`tensor`] — truncated tensor algebra T^N(ℝ^m): product, exp/log,
//!   shuffle product, homogeneous norm.
//! * [`path`] — discrete paths, Brownian sampling, Hölder and p-variation
//!   norms, the weights ψ(x) = exp(β·r(x)^γ), CSV persistence.
//! * [`signature`] — Chen signatures of piecewise-linear paths, prefix
//!   streams, the (p, α)-norm of lifted paths.
//! * [`optim`] — Adam and shared training-loop configuration.
//! * [`fnn`] — non-anticipative functional input networks with exact
//!   gradients.
//! * [`regression`] — linear models on signature features, fit by Adam or
//!   closed-form weighted ridge.
//! * [`kernel`] — truncated signature kernels, the Goursat PDE solver, and
//!   Gaussian-process regression on signature features.
//! * [`experiment`] — the end-to-end benchmark: Brownian batches, running
//!   max and clipped-average targets, training, artifact files.
//!
//! Each capability has a runnable demonstration under `examples/`; start
//! with `cargo run --example signatures`.

pub mod error;
pub mod experiment;
pub mod fnn;
mod io;
pub mod kernel;
pub mod optim;
pub mod path;
pub mod regression;
pub mod signature;
pub mod tensor;

pub use error::{Error, Result};
