//! Bias-corrected Adam over a [`ParamSet`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{NdError, Result};
use crate::ParamSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f32) -> Self {
        Self { lr, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: BTreeMap<String, Vec<f32>>,
    v: BTreeMap<String, Vec<f32>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update from the gradients currently held in `params` and
    /// then clears them. A non-finite gradient anywhere aborts the step with
    /// parameters, moments and step count untouched (the gradients are still
    /// cleared so the caller can carry on with the next batch).
    pub fn step(&mut self, params: &mut ParamSet) -> Result<()> {
        let bad = params
            .iter()
            .find(|(_, t)| t.grad().is_some_and(|g| g.iter().any(|v| !v.is_finite())))
            .map(|(n, _)| n.to_string());
        if let Some(bad) = bad {
            params.zero_grad();
            return Err(NdError::NonFiniteGradient(bad));
        }

        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - (beta1 as f64).powi(self.step as i32);
        let bc2 = 1.0 - (beta2 as f64).powi(self.step as i32);
        for (name, t) in params.iter_mut() {
            let n = t.len();
            let m = self.m.entry(name.to_string()).or_insert_with(|| vec![0.0; n]);
            let v = self.v.entry(name.to_string()).or_insert_with(|| vec![0.0; n]);
            let Some(grad) = t.grad().map(<[f32]>::to_vec) else {
                continue;
            };
            let data = t.data_mut();
            for k in 0..n {
                let g = grad[k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * g;
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
                let m_hat = m[k] as f64 / bc1;
                let v_hat = v[k] as f64 / bc2;
                data[k] -= (lr as f64 * m_hat / (v_hat.sqrt() + eps as f64)) as f32;
            }
            t.zero_grad();
        }
        Ok(())
    }
}
