use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{GanConfig, GanError, Result};
use crate::corpus::SubtreeRepository;
use crate::TokenId;

/// Everything sampling needs to know about the vocabulary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingContext {
    pub vocab: usize,
    /// Sorted.
    pub start_ids: Vec<TokenId>,
    pub end_ids: BTreeSet<TokenId>,
    /// Height of each token when scaled to the render width.
    pub heights: Vec<u32>,
    pub height_budget: u32,
    pub max_len: usize,
}

impl SamplingContext {
    /// Heights are measured at the corpus screen width; the budget defaults
    /// to the corpus screen height.
    pub fn from_repo(repo: &SubtreeRepository, config: &GanConfig) -> Result<Self> {
        let (width, height) = repo.canonical_screen_size();
        let heights = (0..repo.len())
            .map(|id| {
                repo.get(id)
                    .map(|t| t.rendered_height(width))
                    .ok_or_else(|| GanError::InvalidConfig(format!("repository ids are not dense: {id} missing")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            repo.len(),
            repo.start_ids.iter().copied().collect(),
            repo.end_ids.clone(),
            heights,
            config.height_budget.unwrap_or(height),
            config.max_len,
        )
    }

    pub fn new(
        vocab: usize,
        start_ids: Vec<TokenId>,
        end_ids: BTreeSet<TokenId>,
        heights: Vec<u32>,
        height_budget: u32,
        max_len: usize,
    ) -> Result<Self> {
        let mut start_ids = start_ids;
        start_ids.sort_unstable();
        start_ids.dedup();
        if start_ids.is_empty() {
            return Err(GanError::EmptyStartList);
        }
        if heights.len() != vocab {
            return Err(GanError::InvalidConfig(format!("{} heights for {vocab} tokens", heights.len())));
        }
        if let Some(bad) = start_ids.iter().chain(&end_ids).find(|&&id| id >= vocab) {
            return Err(GanError::InvalidConfig(format!("token {bad} outside vocabulary of {vocab}")));
        }
        Ok(Self { vocab, start_ids, end_ids, heights, height_budget, max_len })
    }
}
