//! Style (homogeneity), structure (edit distance) and fused training losses.

mod fusion;
mod homogeneity;
mod kmeans;
mod med;
mod style;

pub use fusion::{fuse, FusedLoss, FusionWeights, WeightMode};
pub use homogeneity::{entropy, homogeneity};
pub use kmeans::{cluster_for_homogeneity, kmeans, KMeansResult, KMEANS_MAX_ITERS};
pub use med::{med, structure_loss};
pub use style::{sequence_homogeneity, style_loss};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("length mismatch: {0} labels vs {1} cluster ids")]
    LengthMismatch(usize, usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("no embedding for token {0}")]
    MissingEmbedding(usize),

    #[error("unknown token {0}")]
    UnknownToken(usize),

    #[error("real batch is empty")]
    EmptyBatch,

    #[error("non-finite loss term: {0}")]
    NonFiniteLoss(String),
}
