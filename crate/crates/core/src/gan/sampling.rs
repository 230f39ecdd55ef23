use rand::Rng;

use super::{Generator, Result, SamplingContext};
use crate::{Termination, TokenId, TokenSequence};
use guigan_ndnet::loss::softmax;
use guigan_ndnet::ParamSet;

/// How the next token is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    /// Draw from the generator's softmax.
    Sample,
    /// Highest probability, lowest id on ties.
    Greedy,
    /// Uniform over the unmasked vocabulary; the generator is not consulted.
    Uniform,
}

fn draw<R: Rng + ?Sized>(probs: &[f32], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let total: f64 = probs.iter().map(|&p| f64::from(p)).sum();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += f64::from(p) / total;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Samples one sequence, or completes `prefix` when it is non-empty.
///
/// Free sampling and rollouts share this path: every candidate token, forced
/// or drawn, goes through the same checks. After the first token, a candidate
/// whose height would push the stack past the budget is rejected and ends the
/// sequence. An accepted end-list token ends it, as does reaching `max_len`.
pub fn sample_sequence<R: Rng + ?Sized>(
    gen: &Generator,
    ps: &ParamSet,
    ctx: &SamplingContext,
    rng: &mut R,
    policy: Policy,
    prefix: &[TokenId],
) -> Result<TokenSequence> {
    let mut tokens: Vec<TokenId> = Vec::with_capacity(ctx.max_len.min(64));
    let mut height: u64 = 0;
    let mut state = gen.initial_state();
    let mut logits: Vec<f32> = Vec::new();
    let mut forced = prefix.iter().copied();
    loop {
        let candidate = match forced.next() {
            Some(t) => t,
            None if tokens.is_empty() => ctx.start_ids[rng.gen_range(0..ctx.start_ids.len())],
            None => match policy {
                Policy::Sample => draw(&softmax(&logits), rng),
                Policy::Greedy => argmax(&logits),
                Policy::Uniform => {
                    let allowed: Vec<usize> = (0..ctx.vocab).filter(|&i| gen.next_mask[i]).collect();
                    allowed[rng.gen_range(0..allowed.len())]
                }
            },
        };
        let h = u64::from(ctx.heights[candidate]);
        if !tokens.is_empty() && height + h > u64::from(ctx.height_budget) {
            return Ok(TokenSequence::new(tokens, Termination::HeightBudget));
        }
        tokens.push(candidate);
        height += h;
        if ctx.end_ids.contains(&candidate) {
            return Ok(TokenSequence::new(tokens, Termination::EndToken));
        }
        if tokens.len() >= ctx.max_len {
            return Ok(TokenSequence::new(tokens, Termination::LengthCap));
        }
        if policy != Policy::Uniform || forced.len() > 0 {
            let (next, l) = gen.step(ps, candidate, &state)?;
            state = next;
            logits = l;
        }
    }
}
