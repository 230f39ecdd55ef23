//! Sequence GAN over subtree tokens: an LSTM policy, a highway-CNN
//! discriminator, Monte-Carlo rollout rewards and a REINFORCE generator
//! update whose per-sequence advantage folds in the style and structure
//! losses.

mod config;
mod context;
mod discriminator;
mod generator;
mod rollout;
mod sampling;
mod steps;
mod train;

pub use config::{FusionMode, GanConfig};
pub use context::SamplingContext;
pub use discriminator::{DiscCache, Discriminator, DISCRIMINATOR_KIND};
pub use generator::{init_generator, Generator, GENERATOR_KIND};
pub use rollout::{rollout_rewards, ConstantScorer, DiscScorer, SequenceScorer};
pub use sampling::{sample_sequence, Policy};
pub use steps::{
    d_step, d_step_on, g_step, mle_gradient, perplexity, policy_gradient, pretrain_generator, DStepStats,
    FusionState, GStepStats, PretrainLog, Shaping, FUSION_KIND,
};
pub use train::{generate, load_run, train, LogEntry, RunArtifacts, TrainOutput};

use guigan_ndnet::NdError;
use thiserror::Error;

use crate::losses::LossError;
use crate::TokenId;

#[derive(Debug, Error)]
pub enum GanError {
    #[error("no embedding for token {0}")]
    MissingEmbedding(TokenId),

    #[error("start list is empty")]
    EmptyStartList,

    #[error("no real sequences")]
    NoRealSequences,

    #[error("invalid GAN config: {0}")]
    InvalidConfig(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error(transparent)]
    Net(#[from] NdError),

    #[error(transparent)]
    Loss(#[from] LossError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GanError>;
