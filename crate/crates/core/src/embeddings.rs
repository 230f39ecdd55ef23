use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::TokenId;

/// Per-token style vectors, serialized as `{ "<token_id>": [..], .. }`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingTable {
    pub vectors: BTreeMap<TokenId, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: TokenId, v: Vec<f32>) {
        self.vectors.insert(id, v);
    }

    pub fn get(&self, id: TokenId) -> Option<&[f32]> {
        self.vectors.get(&id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Dimension of the first vector, 0 when empty.
    pub fn dim(&self) -> usize {
        self.vectors.values().next().map_or(0, Vec::len)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        fs::write(path, text)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_uses_string_keys() {
        let mut t = EmbeddingTable::new();
        t.insert(3, vec![0.5, -1.0]);
        t.insert(0, vec![1.0, 2.0]);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"0":[1.0,2.0],"3":[0.5,-1.0]}"#);
        let back: EmbeddingTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
