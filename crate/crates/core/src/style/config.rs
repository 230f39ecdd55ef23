use guigan_ndnet::conv::Padding;
use serde::{Deserialize, Serialize};

use super::{Result, StyleError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SiameseConfig {
    /// `(H, W)` of the network input.
    pub input_size: (usize, usize),
    pub base_filters: usize,
    /// Square kernel side per conv block; filters double per block.
    pub kernels: Vec<usize>,
    pub padding: Padding,
    pub embedding_dim: usize,
    pub batch: usize,
    pub lr: f32,
    pub epochs: usize,
    pub pairs_per_epoch: usize,
    pub heldout_pairs: usize,
    /// Fraction of each app's screens held out for pair accuracy.
    pub heldout_frac: f64,
    /// Pad crops to square with mid-gray when a direct resize would distort
    /// the aspect ratio by more than this factor. `None` always resizes directly.
    pub pad_distortion: Option<f64>,
}

impl SiameseConfig {
    /// Full-size network: 512×256 inputs, 64 base filters, valid convolutions.
    pub fn full_scale() -> Self {
        Self {
            input_size: (512, 256),
            base_filters: 64,
            kernels: vec![10, 7, 4, 4],
            padding: Padding::Valid,
            embedding_dim: 64,
            batch: 32,
            lr: 0.05,
            epochs: 50,
            pairs_per_epoch: 1024,
            heldout_pairs: 256,
            heldout_frac: 0.1,
            pad_distortion: Some(4.0),
        }
    }

    /// Laptop-scale network: 64×32 inputs, 8 base filters, same-padded
/// convolutions and a smaller Adam step.
    pub fn desk() -> Self {
        Self {
            input_size: (64, 32),
            base_filters: 8,
            padding: Padding::Same,
            lr: 5e-4,
            epochs: 10,
            pairs_per_epoch: 256,
            heldout_pairs: 200,
            ..Self::full_scale()
        }
    }

    pub fn filters(&self) -> Vec<usize> {
        (0..self.kernels.len()).map(|i| self.base_filters << i).collect()
    }

    /// Spatial size after every conv + pool block.
    pub fn block_sizes(&self) -> Option<Vec<(usize, usize)>> {
        let (mut h, mut w) = self.input_size;
        let mut out = Vec::with_capacity(self.kernels.len());
        for &k in &self.kernels {
            h = self.padding.output_len(h, k)? / 2;
            w = self.padding.output_len(w, k)? / 2;
            if h == 0 || w == 0 {
                return None;
            }
            out.push((h, w));
        }
        Some(out)
    }

    pub fn flat_dim(&self) -> usize {
        let (h, w) = self.block_sizes().and_then(|s| s.last().copied()).unwrap_or((0, 0));
        h * w * self.filters().last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(StyleError::InvalidConfig(m.to_string()));
        if self.kernels.is_empty() || self.kernels.contains(&0) {
            return bad("kernels must be non-empty and positive");
        }
        if self.base_filters == 0 || self.embedding_dim == 0 || self.batch == 0 {
            return bad("base_filters, embedding_dim and batch must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(0.0..1.0).contains(&self.heldout_frac) {
            return bad("heldout_frac must be in [0, 1)");
        }
        if self.block_sizes().is_none() {
            return Err(StyleError::InvalidConfig(format!(
                "input {:?} does not survive {} conv+pool blocks with kernels {:?}",
                self.input_size,
                self.kernels.len(),
                self.kernels
            )));
        }
        Ok(())
    }
}

impl Default for SiameseConfig {
    fn default() -> Self {
        Self::desk()
    }
}
