//! Adam with bias correction, plus the plateau learning-rate schedule and early stop.

use crate::error::{Error, Result};

/// Schedule constants: multiply the learning rate by `decay` after every
/// `patience` epochs without improvement and stop after `stop_patience`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauPolicy {
    pub decay: f64,
    pub patience: usize,
    pub stop_patience: usize,
}

impl Default for PlateauPolicy {
    fn default() -> Self {
        Self {
            decay: 0.8,
            patience: 2,
            stop_patience: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    policy: PlateauPolicy,
    stagnant_epochs: usize,
    best_loss: Option<f64>,
}

impl OptimizerState {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Self::with_policy(num_params, lr, PlateauPolicy::default())
    }

    pub fn with_policy(num_params: usize, lr: f64, policy: PlateauPolicy) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            policy,
            stagnant_epochs: 0,
            best_loss: None,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn best_loss(&self) -> Option<f64> {
        self.best_loss
    }

    pub fn stagnant_epochs(&self) -> usize {
        self.stagnant_epochs
    }

    /// One descent step on `params` along `grads`.
    pub fn adam_step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Contract(format!(
                "optimizer tracks {} parameters, got params {} / grads {}",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::Training(format!(
                "non-finite gradient component {i} ({}) at step {}",
                grads[i],
                self.step + 1
            )));
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }

    /// Records one epoch's validation loss; returns the (possibly reduced)
    /// learning rate and whether training should stop.
    pub fn plateau_schedule(&mut self, validation_loss: f64) -> (f64, bool) {
        match self.best_loss {
            Some(best) if validation_loss >= best => {
                self.stagnant_epochs += 1;
                if self.stagnant_epochs % self.policy.patience == 0 {
                    self.lr *= self.policy.decay;
                }
            }
            _ => {
                self.best_loss = Some(validation_loss);
                self.stagnant_epochs = 0;
            }
        }
        (self.lr, self.stagnant_epochs >= self.policy.stop_patience)
    }
}
