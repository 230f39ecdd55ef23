use thiserror::Error;

use guigan_core::compose::ComposeError;
use guigan_core::corpus::CorpusError;
use guigan_core::eval::EvalError;
use guigan_core::gan::GanError;
use guigan_core::style::StyleError;
use guigan_core::synth::SynthError;
use guigan_ndnet::NdError;

/// Failure classes, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("training diverged: {0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

macro_rules! data_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_errors!(std::io::Error, serde_json::Error, image::ImageError, CorpusError, SynthError, NdError, ComposeError);

impl From<StyleError> for CliError {
    fn from(e: StyleError) -> Self {
        match e {
            StyleError::Divergence { .. } => CliError::Divergence(e.to_string()),
            StyleError::InvalidConfig(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<GanError> for CliError {
    fn from(e: GanError) -> Self {
        match e {
            GanError::Divergence(m) => CliError::Divergence(m),
            GanError::InvalidConfig(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Style(s) => s.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}
