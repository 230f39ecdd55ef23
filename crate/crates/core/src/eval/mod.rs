//! Distribution metrics over style-embedding features of real and
//! generated screens, and the report that bundles them.

mod features;
mod fid;
mod nna;
mod report;

use thiserror::Error;

use crate::compose::ComposeError;
use crate::losses::LossError;
use crate::style::StyleError;

pub use features::{extract_features, FeatureMatrix, Source};
pub use fid::{fid, FID_RIDGE};
pub use nna::one_nna;
pub use report::{checkpoint_digest, evaluate, subsample_indices, EvalReport, EvalSet};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("feature dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("feature matrix contains a non-finite value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("need at least 2 samples per set, got {0}")]
    TooFewSamples(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("{0} set is empty")]
    EmptySet(&'static str),
    #[error(transparent)]
    Style(#[from] StyleError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

pub type Result<T> = std::result::Result<T, EvalError>;
