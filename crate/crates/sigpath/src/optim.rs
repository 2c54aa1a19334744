//! Adam and the training-loop knobs shared by the functional network and
//! the linear signature model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimizer and loop settings.  `test_every` is measured in epochs; the
/// loss curve also records the final epoch even when it is off-period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub test_every: usize,
    /// Seed for the per-epoch shuffle of path indices.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { lr: 1e-5, batch_size: 500, epochs: 4000, test_every: 200, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::Config(format!("learning rate must be ≥ 0, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.test_every == 0 {
            return Err(Error::Config("test period must be positive".into()));
        }
        Ok(())
    }
}

/// Adam with the usual bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    /// One update: θ ← θ − lr·m̂/(√v̂ + ε).
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

/// Per-epoch training losses plus the periodically evaluated test loss.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossCurve {
    /// train[e] is the loss of epoch e+1, accumulated over its minibatches.
    pub train: Vec<f64>,
    /// (epoch, loss) pairs at the test-evaluation epochs.
    pub test: Vec<(usize, f64)>,
}
