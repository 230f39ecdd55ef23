use serde::{Deserialize, Serialize};

use super::LossError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum WeightMode {
    Fixed { lambda: [f64; 3] },
    /// Log-variance parameters; the effective weight is `exp(−s_i)`.
    Trainable { s: [f64; 3] },
}

/// Weights for `(loss_g, loss_c, loss_s)`. Inactive terms have weight 0 and,
/// in trainable mode, contribute neither `s_i` nor a gradient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub mode: WeightMode,
    pub active: [bool; 3],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusedLoss {
    pub value: f64,
    pub lambda: [f64; 3],
    /// `∂/∂s_i`; present in trainable mode only.
    pub grad_s: Option<[f64; 3]>,
}

impl FusionWeights {
    pub fn fixed(lambda: [f64; 3]) -> Self {
        Self {
            mode: WeightMode::Fixed { lambda },
            active: [true; 3],
        }
    }

    pub fn trainable() -> Self {
        Self {
            mode: WeightMode::Trainable { s: [0.0; 3] },
            active: [true; 3],
        }
    }

    pub fn with_active(mut self, active: [bool; 3]) -> Self {
        self.active = active;
        self
    }

    /// Effective λ per term.
    pub fn lambda(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            if self.active[i] {
                *o = match self.mode {
                    WeightMode::Fixed { lambda } => lambda[i],
                    WeightMode::Trainable { s } => (-s[i]).exp(),
                };
            }
        }
        out
    }

    pub fn is_trainable(&self) -> bool {
        matches!(self.mode, WeightMode::Trainable { .. })
    }

    /// Plain gradient step on `s` (trainable mode only).
    pub fn apply_grad(&mut self, grad: [f64; 3], lr: f64) {
        if let WeightMode::Trainable { s } = &mut self.mode {
            for i in 0..3 {
                if self.active[i] {
                    s[i] -= lr * grad[i];
                }
            }
        }
    }
}

pub fn fuse(losses: [f64; 3], weights: &FusionWeights) -> Result<FusedLoss, LossError> {
    if let Some(i) = losses.iter().position(|l| !l.is_finite()) {
        return Err(LossError::NonFiniteLoss(format!("term {i} = {}", losses[i])));
    }
    let lambda = weights.lambda();
    let mut value: f64 = (0..3).map(|i| lambda[i] * losses[i]).sum();
    let grad_s = match weights.mode {
        WeightMode::Fixed { .. } => None,
        WeightMode::Trainable { s } => {
            let mut g = [0.0; 3];
            for i in 0..3 {
                if weights.active[i] {
                    value += s[i];
                    g[i] = -lambda[i] * losses[i] + 1.0;
                }
            }
            Some(g)
        }
    };
    Ok(FusedLoss { value, lambda, grad_s })
}
