//! Siamese style embedding: a shared CNN tower maps a subtree crop to an
//! N-dimensional vector, and a learned weighted L1 head scores whether two
//! crops come from the same app.

mod config;
mod pairs;
mod preprocess;
mod siamese;
mod train;

pub use config::SiameseConfig;
pub use pairs::{heldout_split, sample_pairs, Pair, Split};
pub use preprocess::{pad_to_square, resize_nearest, to_input};
pub use siamese::{EmbedCache, Siamese, SIAMESE_KIND};
pub use train::{pair_accuracy, train_siamese, EpochLog, TrainedSiamese};

use guigan_ndnet::{NdError, ParamSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StyleError {
    #[error("insufficient corpus: {0}")]
    InsufficientCorpus(String),

    #[error("empty image")]
    EmptyImage,

    #[error("invalid siamese config: {0}")]
    InvalidConfig(String),

    #[error("training diverged at epoch {epoch}: {reason}")]
    Divergence {
        epoch: usize,
        reason: String,
        last_good: Box<ParamSet>,
    },

    #[error("unknown token {0}")]
    UnknownToken(usize),

    #[error(transparent)]
    Net(#[from] NdError),
}

pub type Result<T> = std::result::Result<T, StyleError>;
