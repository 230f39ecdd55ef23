pub mod compose;
pub mod corpus;
pub mod eval;
mod embeddings;
pub mod losses;
pub mod style;
mod sequence;
pub mod gan;
pub mod synth;

pub use embeddings::EmbeddingTable;
pub use sequence::{Termination, TokenId, TokenSequence};
