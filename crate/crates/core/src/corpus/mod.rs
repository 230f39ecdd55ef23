//! GUI hierarchy ingestion: parse screens, cut them into subtrees and build
//! the token repository the generator draws from.

mod io;
mod node;
mod repository;
mod segment;
mod structure;

pub use io::{load_input_dir, write_screen, ScreenFiles};
pub use node::{parse_screen, parse_screen_bytes, Bounds, ComponentNode, GuiScreen};
pub use repository::{
    build_repository, ScreenInfo, Subtree, SubtreeRepository, REPOSITORY_FORMAT_VERSION,
};
pub use segment::{segment_subtrees, SegmentParams, Segment};
pub use structure::{structure_string, structure_symbols, Alphabet, Symbol};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed metadata for {screen}: {reason}")]
    MalformedMetadata { screen: String, reason: String },

    #[error("screenshot for {screen} could not be used: {reason}")]
    ImageMismatch { screen: String, reason: String },

    #[error("no subtree of {screen} survived segmentation")]
    EmptySegmentation { screen: String },

    #[error("no screen survived segmentation")]
    EmptyCorpus,

    #[error("invalid repository: {0}")]
    InvalidRepository(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}
