//! A minimal differentiable numeric core.
//!
//! There is no autodiff graph here. Every layer exposes a `forward` that
//! returns whatever it needs to remember, and a `backward` that takes that
//! cache plus the upstream gradient, accumulates parameter gradients into the
//! owning [`ParamSet`] and returns the gradient with respect to its input.
//! Networks are composed by hand on top of these pieces.

pub mod activation;
pub mod adam;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod embedding;
mod error;
pub mod gradcheck;
pub mod gradsuite;
pub mod highway;
pub mod init;
mod linalg;
pub mod loss;
pub mod lstm;
mod params;
pub mod pool;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use error::{NdError, Result};
pub use params::{ParamSet, PARAMSET_FORMAT_VERSION};
pub use tensor::Tensor;
