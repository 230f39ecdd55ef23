use serde::{Deserialize, Serialize};

use super::{GanError, Result};
use crate::losses::{FusionWeights, WeightMode};

/// Which loss terms drive the generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    Full,
    /// Adversarial + style; the structure weight is 0.
    StyleOnly,
    /// Adversarial + structure; the style weight is 0.
    StructureOnly,
    AdversarialOnly,
}

impl FusionMode {
    pub fn active(self) -> [bool; 3] {
        match self {
            Self::Full => [true, true, true],
            Self::StyleOnly => [true, true, false],
            Self::StructureOnly => [true, false, true],
            Self::AdversarialOnly => [true, false, false],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::StyleOnly => "style_only",
            Self::StructureOnly => "structure_only",
            Self::AdversarialOnly => "adversarial_only",
        }
    }
}

impl std::str::FromStr for FusionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Self::Full),
            "style_only" => Ok(Self::StyleOnly),
            "structure_only" => Ok(Self::StructureOnly),
            "adversarial_only" => Ok(Self::AdversarialOnly),
            other => Err(format!("unknown fusion mode {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub max_len: usize,
    pub batch: usize,
    pub lr: f32,
    pub rollout_count: usize,
    pub pretrain_epochs: usize,
    pub rounds: usize,
    pub d_steps: usize,
    pub g_steps: usize,
    /// Defaults to the corpus screen height.
    pub height_budget: Option<u32>,
    pub mode: FusionMode,
    /// Learn log-variance weights; otherwise use `fixed_lambda`.
    pub trainable_weights: bool,
    pub fixed_lambda: [f64; 3],
    pub disc_filters: usize,
    pub disc_kernels: Vec<usize>,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            hidden_dim: 32,
            max_len: 30,
            batch: 32,
            lr: 0.05,
            rollout_count: 16,
            pretrain_epochs: 10,
            rounds: 10,
            d_steps: 1,
            g_steps: 1,
            height_budget: None,
            mode: FusionMode::Full,
            trainable_weights: true,
            fixed_lambda: [1.0, 1.0, 1.0],
            disc_filters: 32,
            disc_kernels: vec![2, 3],
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("max_len", self.max_len),
            ("batch", self.batch),
            ("rollout_count", self.rollout_count),
            ("disc_filters", self.disc_filters),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(GanError::InvalidConfig(format!("{name} must be positive")));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(GanError::InvalidConfig("lr must be positive".into()));
        }
        if self.disc_kernels.is_empty() || self.disc_kernels.iter().any(|&k| k == 0 || k > self.max_len) {
            return Err(GanError::InvalidConfig(format!(
                "disc_kernels {:?} must be non-empty and within 1..={}",
                self.disc_kernels, self.max_len
            )));
        }
        if self.height_budget == Some(0) {
            return Err(GanError::InvalidConfig("height_budget must be positive".into()));
        }
        if self.fixed_lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(GanError::InvalidConfig("fixed_lambda entries must be >= 0".into()));
        }
        Ok(())
    }

    pub fn fusion_weights(&self) -> FusionWeights {
        let mode = if self.trainable_weights {
            WeightMode::Trainable { s: [0.0; 3] }
        } else {
            WeightMode::Fixed { lambda: self.fixed_lambda }
        };
        FusionWeights { mode, active: self.mode.active() }
    }
}
