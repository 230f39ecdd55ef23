use guigan_ndnet::ParamSet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{sample_sequence, Discriminator, Generator, Policy, Result, SamplingContext};
use crate::{TokenId, TokenSequence};

/// Anything that assigns a realness probability to a token sequence.
pub trait SequenceScorer: Sync {
    fn score(&self, tokens: &[TokenId]) -> Result<f32>;
}

pub struct DiscScorer<'a> {
    pub disc: &'a Discriminator,
    pub params: &'a ParamSet,
}

impl SequenceScorer for DiscScorer<'_> {
    fn score(&self, tokens: &[TokenId]) -> Result<f32> {
        self.disc.prob(self.params, tokens)
    }
}

pub struct ConstantScorer(pub f32);

impl SequenceScorer for ConstantScorer {
    fn score(&self, _: &[TokenId]) -> Result<f32> {
        Ok(self.0)
    }
}

impl<F> SequenceScorer for F
where
    F: Fn(&[TokenId]) -> f32 + Sync,
{
    fn score(&self, tokens: &[TokenId]) -> Result<f32> {
        Ok(self(tokens))
    }
}

/// `Q[t−1]` for prefix length `t`: the mean score of `n` policy completions
/// of `tokens[..t]`, and the score of the full sequence at `t = T`.
///
/// Rollout `k` of prefix `t` draws from its own stream of `seed`, and the
/// average is taken in rollout order, so results do not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn rollout_rewards(
    seq: &TokenSequence,
    gen: &Generator,
    ps: &ParamSet,
    ctx: &SamplingContext,
    scorer: &dyn SequenceScorer,
    n: usize,
    seed: u64,
    policy: Policy,
) -> Result<Vec<f32>> {
    let t_len = seq.len();
    let jobs: Vec<(usize, usize)> = (1..t_len).flat_map(|t| (0..n).map(move |k| (t, k))).collect();
    let scores: Vec<f32> = jobs
        .par_iter()
        .map(|&(t, k)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((t * n + k) as u64);
            let done = sample_sequence(gen, ps, ctx, &mut rng, policy, &seq.tokens[..t])?;
            scorer.score(&done.tokens)
        })
        .collect::<Result<_>>()?;
    let mut q: Vec<f32> = scores
        .chunks(n.max(1))
        .map(|c| (c.iter().map(|&s| f64::from(s)).sum::<f64>() / c.len() as f64) as f32)
        .collect();
    q.push(scorer.score(&seq.tokens)?);
    Ok(q)
}
