use image::RgbImage;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use guigan_ndnet::ParamSet;

use super::{EvalError, Result};
use crate::style::Siamese;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Real,
    Generated,
}

/// One feature vector per row, all finite.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub data: DMatrix<f64>,
    pub source: Source,
}

impl FeatureMatrix {
    pub fn from_rows(rows: &[Vec<f64>], source: Source) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(EvalError::DimensionMismatch(dim, bad.len()));
        }
        for (row, r) in rows.iter().enumerate() {
            if let Some(col) = r.iter().position(|v| !v.is_finite()) {
                return Err(EvalError::NonFiniteFeature { row, col });
            }
        }
        let data = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        Ok(Self { data, source })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }
}

/// Embeds whole screen images with the trained siamese tower. Each image is
/// resized to the network input first; rows follow input order.
pub fn extract_features(images: &[RgbImage], model: &Siamese, ps: &ParamSet, source: Source) -> Result<FeatureMatrix> {
    if images.is_empty() {
        return Err(EvalError::ShapeMismatch("no images to embed".into()));
    }
    let rows: Vec<Vec<f64>> = model
        .embed_batch(ps, images)?
        .into_iter()
        .map(|v| v.into_iter().map(f64::from).collect())
        .collect();
    FeatureMatrix::from_rows(&rows, source)
}
