use std::collections::BTreeSet;

use super::{cluster_for_homogeneity, homogeneity, LossError};
use crate::corpus::SubtreeRepository;
use crate::{EmbeddingTable, TokenId};

/// Homogeneity of a token list's embeddings against their source apps.
/// `None` when the tokens come from a single app.
pub fn sequence_homogeneity(
    tokens: &[TokenId],
    repo: &SubtreeRepository,
    embeddings: &EmbeddingTable,
) -> Result<Option<f64>, LossError> {
    if tokens.is_empty() {
        return Err(LossError::Empty("style loss needs a non-empty sequence"));
    }
    let mut apps = Vec::with_capacity(tokens.len());
    let mut points = Vec::with_capacity(tokens.len());
    for &t in tokens {
        apps.push(repo.app_of(t).ok_or(LossError::UnknownToken(t))?);
        let v = embeddings.get(t).ok_or(LossError::MissingEmbedding(t))?;
        points.push(v.iter().map(|&x| f64::from(x)).collect::<Vec<f64>>());
    }
    if apps.iter().collect::<BTreeSet<_>>().len() == 1 {
        return Ok(None);
    }
    let clusters = cluster_for_homogeneity(&points, &apps)?;
    Ok(Some(homogeneity(&apps, &clusters)?))
}

/// `0` for single-app sequences, otherwise `exp(−h)`.
pub fn style_loss(tokens: &[TokenId], repo: &SubtreeRepository, embeddings: &EmbeddingTable) -> Result<f64, LossError> {
    Ok(match sequence_homogeneity(tokens, repo, embeddings)? {
        None => 0.0,
        Some(h) => (-h).exp(),
    })
}
