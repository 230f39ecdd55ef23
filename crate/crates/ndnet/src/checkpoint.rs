//! Checkpoint files: a JSON header listing parameter names and shapes in
//! storage order, plus a sidecar of little-endian `f32` values concatenated
//! in that same order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{NdError, Result};
use crate::{ParamSet, Tensor, PARAMSET_FORMAT_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub kind: String,
    /// Sidecar file name, relative to the header.
    pub data_file: String,
    pub params: Vec<ParamEntry>,
    #[serde(default)]
    pub hyperparameters: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub hyperparameters: serde_json::Value,
    pub params: ParamSet,
}

/// Sidecar path for a header path: same stem, `.bin` extension.
pub fn data_path(header: &Path) -> PathBuf {
    header.with_extension("bin")
}

impl Checkpoint {
    pub fn new(kind: impl Into<String>, params: ParamSet, hyperparameters: serde_json::Value) -> Self {
        Self {
            kind: kind.into(),
            hyperparameters,
            params,
        }
    }

    pub fn header(&self, data_file: String) -> CheckpointHeader {
        CheckpointHeader {
            format_version: PARAMSET_FORMAT_VERSION,
            kind: self.kind.clone(),
            data_file,
            params: self
                .params
                .iter()
                .map(|(name, t)| ParamEntry {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
            hyperparameters: self.hyperparameters.clone(),
        }
    }

    pub fn data_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(self.params.num_scalars() * 4);
        for (_, t) in self.params.iter() {
            for v in t.data() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        bytes
    }

    /// Writes `header_path` and its `.bin` sidecar.
    pub fn save(&self, header_path: &Path) -> Result<()> {
        let data = data_path(header_path);
        let data_file = data
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| NdError::Checkpoint(format!("bad path {}", header_path.display())))?
            .to_string();
        if let Some(dir) = header_path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let header = self.header(data_file);
        fs::write(header_path, serde_json::to_vec_pretty(&header)?)?;
        fs::write(&data, self.data_bytes())?;
        Ok(())
    }

    pub fn load(header_path: &Path) -> Result<Self> {
        let header: CheckpointHeader = serde_json::from_slice(&fs::read(header_path)?)?;
        if header.format_version != PARAMSET_FORMAT_VERSION {
            return Err(NdError::Checkpoint(format!(
                "unsupported format_version {}",
                header.format_version
            )));
        }
        let dir = header_path.parent().unwrap_or_else(|| Path::new(""));
        let bytes = fs::read(dir.join(&header.data_file))?;
        let expected: usize = header
            .params
            .iter()
            .map(|p| p.shape.iter().product::<usize>() * 4)
            .sum();
        if bytes.len() != expected {
            return Err(NdError::Checkpoint(format!(
                "data file holds {} bytes, header describes {}",
                bytes.len(),
                expected
            )));
        }
        let mut params = ParamSet::new();
        let mut offset = 0;
        for entry in &header.params {
            let n: usize = entry.shape.iter().product();
            let values = bytes[offset..offset + 4 * n]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            offset += 4 * n;
            if params
                .insert(entry.name.clone(), Tensor::from_vec(&entry.shape, values)?)
                .is_some()
            {
                return Err(NdError::Checkpoint(format!("duplicate parameter `{}`", entry.name)));
            }
        }
        Ok(Self {
            kind: header.kind,
            hyperparameters: header.hyperparameters,
            params,
        })
    }

    /// Loads and checks the kind tag.
    pub fn load_kind(header_path: &Path, kind: &str) -> Result<Self> {
        let ckpt = Self::load(header_path)?;
        if ckpt.kind != kind {
            return Err(NdError::Checkpoint(format!(
                "expected a `{kind}` checkpoint, found `{}`",
                ckpt.kind
            )));
        }
        Ok(ckpt)
    }
}
