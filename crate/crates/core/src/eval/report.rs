use image::RgbImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use guigan_ndnet::checkpoint::Checkpoint;
use guigan_ndnet::ParamSet;

use super::{extract_features, fid, one_nna, EvalError, Result, Source};
use crate::corpus::SubtreeRepository;
use crate::losses::{sequence_homogeneity, structure_loss, style_loss};
use crate::style::Siamese;
use crate::TokenId;

/// Screen images, optionally paired index-for-index with the token
/// sequences they were rendered from.
#[derive(Clone, Debug, Default)]
pub struct EvalSet {
    pub images: Vec<RgbImage>,
    pub sequences: Vec<Vec<TokenId>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub fid: f64,
    pub one_nna: f64,
    /// Over generated sequences; single-app sequences count as 1.
    pub mean_homogeneity: Option<f64>,
    pub mean_style_loss: Option<f64>,
    pub mean_structure_loss: Option<f64>,
    /// Per-set count after equalization.
    pub real_count: usize,
    pub generated_count: usize,
    pub real_input_count: usize,
    pub generated_input_count: usize,
    pub seed: u64,
    pub embedder_digest: String,
}

/// SHA-256 over a checkpoint's kind, hyperparameters and raw values.
pub fn checkpoint_digest(ck: &Checkpoint) -> String {
    let mut h = Sha256::new();
    h.update(ck.kind.as_bytes());
    h.update(ck.hyperparameters.to_string().as_bytes());
    h.update(ck.data_bytes());
    hex::encode(h.finalize())
}

/// `k` distinct indices below `n` in ascending order; all of them when `k >= n`.
pub fn subsample_indices(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut idx = rand::seq::index::sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    if items.is_empty() {
        return Vec::new();
    }
    idx.iter().map(|&i| items[i].clone()).collect()
}

fn check_pairing(set: &EvalSet, name: &'static str) -> Result<()> {
    if set.images.is_empty() {
        return Err(EvalError::EmptySet(name));
    }
    if !set.sequences.is_empty() && set.sequences.len() != set.images.len() {
        return Err(EvalError::ShapeMismatch(format!(
            "{name} set has {} images but {} sequences",
            set.images.len(),
            set.sequences.len()
        )));
    }
    Ok(())
}

/// Equalizes the two sets by seeded subsampling, embeds every image and
/// scores the generated sequences against the corpus.
pub fn evaluate(
    real: &EvalSet,
    generated: &EvalSet,
    model: &Siamese,
    ps: &ParamSet,
    repo: &SubtreeRepository,
    seed: u64,
    embedder_digest: String,
) -> Result<EvalReport> {
    check_pairing(real, "real")?;
    check_pairing(generated, "generated")?;
    let n = real.images.len().min(generated.images.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ri = subsample_indices(real.images.len(), n, &mut rng);
    let gi = subsample_indices(generated.images.len(), n, &mut rng);

    let fr = extract_features(&pick(&real.images, &ri), model, ps, Source::Real)?;
    let fg = extract_features(&pick(&generated.images, &gi), model, ps, Source::Generated)?;

    let gen_seqs = pick(&generated.sequences, &gi);
    let (mut homog, mut style, mut structure) = (None, None, None);
    if !gen_seqs.is_empty() {
        let embeddings = model.embed_repository(ps, repo)?;
        let real_structs: Vec<_> = repo.real_sequences().iter().map(|s| repo.sequence_structure(&s.tokens)).collect();
        let (mut h, mut s, mut c) = (0.0, 0.0, 0.0);
        for seq in &gen_seqs {
            h += sequence_homogeneity(seq, repo, &embeddings)?.unwrap_or(1.0);
            s += style_loss(seq, repo, &embeddings)?;
            c += structure_loss(&repo.sequence_structure(seq), &real_structs)?;
        }
        let m = gen_seqs.len() as f64;
        (homog, style, structure) = (Some(h / m), Some(s / m), Some(c / m));
    }

    Ok(EvalReport {
        fid: fid(&fr, &fg)?,
        one_nna: one_nna(&fr, &fg)?,
        mean_homogeneity: homog,
        mean_style_loss: style,
        mean_structure_loss: structure,
        real_count: fr.rows(),
        generated_count: fg.rows(),
        real_input_count: real.images.len(),
        generated_input_count: generated.images.len(),
        seed,
        embedder_digest,
    })
}
