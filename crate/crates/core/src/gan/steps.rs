use guigan_ndnet::checkpoint::Checkpoint;
use guigan_ndnet::loss::{bce_loss, log_softmax, softmax_cross_entropy};
use guigan_ndnet::lstm::LstmStepCache;
use guigan_ndnet::{AdamConfig, AdamState, NdError, ParamSet, Tensor};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    rollout_rewards, sample_sequence, Discriminator, GanConfig, GanError, Generator, Policy, Result, SamplingContext,
    SequenceScorer,
};
use crate::corpus::{Symbol, SubtreeRepository};
use crate::losses::{fuse, structure_loss, style_loss, FusionWeights, WeightMode};
use crate::{EmbeddingTable, TokenId, TokenSequence};

pub const FUSION_KIND: &str = "fusion";
const FUSION_PARAM: &str = "fusion.s";

/// What the style and structure terms are measured against.
pub struct Shaping<'a> {
    pub repo: &'a SubtreeRepository,
    pub embeddings: &'a EmbeddingTable,
    pub real: &'a [TokenSequence],
}

/// Fusion weights plus the optimizer that moves `s` in trainable mode.
#[derive(Clone, Debug)]
pub struct FusionState {
    pub weights: FusionWeights,
    params: ParamSet,
    adam: AdamState,
}

impl FusionState {
    pub fn new(weights: FusionWeights, lr: f32) -> Self {
        let s = match weights.mode {
            WeightMode::Trainable { s } => s.map(|v| v as f32).to_vec(),
            WeightMode::Fixed { .. } => vec![0.0; 3],
        };
        let mut params = ParamSet::new();
        params.insert(FUSION_PARAM, Tensor::from_vec(&[3], s).expect("3 values"));
        Self { weights, params, adam: AdamState::new(AdamConfig::with_lr(lr)) }
    }

    pub fn lambda(&self) -> [f64; 3] {
        self.weights.lambda()
    }

    /// One Adam step on `s` with the given gradient; no-op in fixed mode.
    pub fn update(&mut self, grad: [f64; 3]) -> Result<()> {
        let WeightMode::Trainable { s } = &mut self.weights.mode else {
            return Ok(());
        };
        let t = self.params.get_mut(FUSION_PARAM)?;
        for (g, v) in t.grad_mut().iter_mut().zip(grad) {
            *g = v as f32;
        }
        self.adam.step(&mut self.params)?;
        for (dst, &src) in s.iter_mut().zip(self.params.get(FUSION_PARAM)?.data()) {
            *dst = f64::from(src);
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new(FUSION_KIND, self.params.clone(), serde_json::json!({ "weights": self.weights }))
    }
}

struct TeacherForced {
    inputs: Vec<usize>,
    hs: Tensor,
    caches: Vec<LstmStepCache>,
    logits: Tensor,
}

fn teacher_forced(gen: &Generator, ps: &ParamSet, tokens: &[TokenId]) -> Result<TeacherForced> {
    let inputs = tokens[..tokens.len() - 1].to_vec();
    let xs = gen.embedding().forward(ps, &inputs)?;
    let (hs, _, caches) = gen.lstm().sequence(ps, &xs, &gen.initial_state())?;
    let mut logits = gen.output().forward(ps, &hs)?;
    for row in logits.data_mut().chunks_exact_mut(gen.vocab) {
        gen.apply_mask(row);
    }
    Ok(TeacherForced { inputs, hs, caches, logits })
}

/// Summed next-token negative log-likelihood and the number of predictions.
fn sequence_nll(gen: &Generator, ps: &ParamSet, tokens: &[TokenId]) -> Result<(f64, usize)> {
    if tokens.len() < 2 {
        return Ok((0.0, 0));
    }
    let tf = teacher_forced(gen, ps, tokens)?;
    let mut nll = 0.0;
    for (row, &target) in tf.logits.data().chunks_exact(gen.vocab).zip(&tokens[1..]) {
        nll -= f64::from(log_softmax(row)[target]);
    }
    Ok((nll, tokens.len() - 1))
}

/// `exp(mean next-token NLL)` over the given sequences.
pub fn perplexity(gen: &Generator, ps: &ParamSet, seqs: &[TokenSequence]) -> Result<f64> {
    let (mut nll, mut n) = (0.0, 0);
    for s in seqs {
        let (a, b) = sequence_nll(gen, ps, &s.tokens)?;
        nll += a;
        n += b;
    }
    Ok(if n == 0 { 1.0 } else { (nll / n as f64).exp() })
}

/// Accumulates `scale · ∇ Σ NLL` over teacher-forced sequences and returns
/// `(Σ NLL, predictions)`.
pub fn mle_gradient(gen: &Generator, ps: &mut ParamSet, seqs: &[&[TokenId]], scale: f32) -> Result<(f64, usize)> {
    let (mut total, mut count) = (0.0, 0);
    for tokens in seqs {
        if tokens.len() < 2 {
            continue;
        }
        let tf = teacher_forced(gen, ps, tokens)?;
        let mut dlogits = Vec::with_capacity(tf.logits.len());
        for (row, &target) in tf.logits.data().chunks_exact(gen.vocab).zip(&tokens[1..]) {
            let (loss, g) = softmax_cross_entropy(row, target)?;
            total += f64::from(loss);
            dlogits.extend(g.into_iter().map(|v| v * scale));
        }
        count += tokens.len() - 1;
        let dlogits = Tensor::from_vec(tf.logits.shape(), dlogits)?;
        let dhs = gen.output().backward(ps, &tf.hs, &dlogits)?;
        let (dxs, _) = gen.lstm().sequence_backward(ps, &tf.caches, &dhs, None)?;
        gen.embedding().backward(ps, &tf.inputs, &dxs)?;
    }
    Ok((total, count))
}

/// Accumulates the REINFORCE gradient `−(1/B) Σ_seq Σ_{t≥2} A_t ∇ log π(y_t | y_{<t})`.
/// `advantages[i][t]` belongs to token `t` of sequence `i`; index 0 (the
/// start token, not drawn from the policy) is ignored.
pub fn policy_gradient(gen: &Generator, ps: &mut ParamSet, seqs: &[TokenSequence], advantages: &[Vec<f32>]) -> Result<()> {
    let b = seqs.len() as f32;
    let (emb, lstm, out) = (gen.embedding(), gen.lstm(), gen.output());
    let h = gen.hidden_dim;
    for (seq, adv) in seqs.iter().zip(advantages) {
        let tokens = &seq.tokens;
        if tokens.len() < 2 {
            continue;
        }
        let steps = tokens.len() - 1;
        let mut state = gen.initial_state();
        let mut caches = Vec::with_capacity(steps);
        let mut hs = Vec::with_capacity(steps);
        for &tok in &tokens[..steps] {
            let x = emb.forward(ps, &[tok])?.into_data();
            let (next, cache) = lstm.step(ps, &x, &state)?;
            hs.push(Tensor::from_vec(&[1, h], next.h.clone())?);
            caches.push(cache);
            state = next;
        }
        let mut dhs = Vec::with_capacity(steps);
        for (t, h_t) in hs.iter().enumerate() {
            let mut logits = out.forward(ps, h_t)?.into_data();
            gen.apply_mask(&mut logits);
            let logp = log_softmax(&logits);
            let coef = adv[t + 1] / b;
            let target = tokens[t + 1];
            // d(−coef · log π[target]) / dlogits = coef · (π − onehot)
            let dlogits: Vec<f32> = logp
                .iter()
                .enumerate()
                .map(|(k, &lp)| coef * (lp.exp() - if k == target { 1.0 } else { 0.0 }))
                .collect();
            dhs.push(out.backward(ps, h_t, &Tensor::from_vec(&[1, gen.vocab], dlogits)?)?.into_data());
        }
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dxs = vec![Vec::new(); steps];
        for t in (0..steps).rev() {
            let dh: Vec<f32> = dhs[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
            let g = lstm.step_backward(ps, &caches[t], &dh, &dc_next)?;
            dxs[t] = g.dx;
            dh_next = g.dh_prev;
            dc_next = g.dc_prev;
        }
        let dxs = Tensor::from_vec(&[steps, gen.embed_dim], dxs.concat())?;
        emb.backward(ps, &tokens[..steps], &dxs)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainLog {
    pub epoch: usize,
    pub perplexity: f64,
}

/// Teacher-forced maximum likelihood on real sequences.
pub fn pretrain_generator<R: Rng + ?Sized>(
    gen: &Generator,
    ps: &mut ParamSet,
    adam: &mut AdamState,
    real: &[TokenSequence],
    epochs: usize,
    batch: usize,
    rng: &mut R,
) -> Result<Vec<PretrainLog>> {
    if real.is_empty() {
        return Err(GanError::NoRealSequences);
    }
    let mut log = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..real.len()).collect();
    for epoch in 1..=epochs {
        order.shuffle(rng);
        let (mut total, mut count) = (0.0, 0usize);
        for chunk in order.chunks(batch.max(1)) {
            let seqs: Vec<&[TokenId]> = chunk.iter().map(|&i| real[i].tokens.as_slice()).collect();
            let n: usize = seqs.iter().map(|s| s.len().saturating_sub(1)).sum();
            if n == 0 {
                continue;
            }
            let (nll, c) = mle_gradient(gen, ps, &seqs, 1.0 / n as f32)?;
            if !nll.is_finite() {
                ps.zero_grad();
                return Err(GanError::Divergence(format!("pretrain epoch {epoch}: NLL {nll}")));
            }
            adam.step(ps).map_err(|e| GanError::Divergence(format!("pretrain epoch {epoch}: {e}")))?;
            total += nll;
            count += c;
        }
        let perplexity = if count == 0 { 1.0 } else { (total / count as f64).exp() };
        log::debug!("pretrain epoch {epoch}: perplexity {perplexity:.3}");
        log.push(PretrainLog { epoch, perplexity });
    }
    Ok(log)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GStepStats {
    /// Batch mean of `1 − mean_t Q_t`.
    pub loss_g: f64,
    pub loss_c: f64,
    pub loss_s: f64,
    pub lambda: [f64; 3],
    pub fused: f64,
    pub mean_reward: f64,
    pub mean_len: f64,
    /// The generator update was dropped because of a non-finite gradient.
    pub skipped: bool,
}

fn real_structures<R: Rng + ?Sized>(sh: &Shaping, n: usize, rng: &mut R) -> Vec<Vec<Symbol>> {
    (0..n)
        .filter_map(|_| sh.real.choose(rng))
        .map(|s| sh.repo.sequence_structure(&s.tokens))
        .collect()
}

/// Samples a batch, scores every prefix by rollouts, folds the style and
/// structure losses into a per-sequence advantage and takes one Adam step on
/// the generator (and on `s` in trainable mode).
#[allow(clippy::too_many_arguments)]
pub fn g_step<R: Rng + ?Sized>(
    gen: &Generator,
    ps: &mut ParamSet,
    adam: &mut AdamState,
    scorer: &dyn SequenceScorer,
    ctx: &SamplingContext,
    shaping: Option<&Shaping>,
    fusion: &mut FusionState,
    config: &GanConfig,
    rng: &mut R,
) -> Result<GStepStats> {
    let lambda = fusion.lambda();
    if shaping.is_none() && (lambda[1] != 0.0 || lambda[2] != 0.0) {
        return Err(GanError::InvalidConfig("style or structure terms are active but no corpus was given".into()));
    }
    let mut seqs = Vec::with_capacity(config.batch);
    for _ in 0..config.batch {
        seqs.push(sample_sequence(gen, ps, ctx, rng, Policy::Sample, &[])?);
    }
    let seeds: Vec<u64> = seqs.iter().map(|_| rng.gen()).collect();
    let real_batch = shaping.map(|sh| real_structures(sh, config.batch, rng));

    let b = seqs.len() as f64;
    let (mut loss_g, mut loss_c, mut loss_s, mut reward, mut len) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut advantages = Vec::with_capacity(seqs.len());
    for (seq, &seed) in seqs.iter().zip(&seeds) {
        let q = rollout_rewards(seq, gen, ps, ctx, scorer, config.rollout_count, seed, Policy::Sample)?;
        let (lc, ls) = match (shaping, &real_batch) {
            (Some(sh), Some(rb)) => (
                style_loss(&seq.tokens, sh.repo, sh.embeddings)?,
                structure_loss(&sh.repo.sequence_structure(&seq.tokens), rb)?,
            ),
            _ => (0.0, 0.0),
        };
        let q_mean = q.iter().map(|&v| f64::from(v)).sum::<f64>() / q.len() as f64;
        loss_g += (1.0 - q_mean) / b;
        loss_c += lc / b;
        loss_s += ls / b;
        reward += q_mean / b;
        len += seq.len() as f64 / b;
        let penalty = lambda[1] * lc + lambda[2] * ls;
        advantages.push(q.iter().map(|&qt| (lambda[0] * f64::from(qt) - penalty) as f32).collect::<Vec<f32>>());
    }

    policy_gradient(gen, ps, &seqs, &advantages)?;
    let skipped = match adam.step(ps) {
        Ok(()) => false,
        Err(NdError::NonFiniteGradient(msg)) => {
            log::warn!("g-step skipped: {msg}");
            true
        }
        Err(e) => return Err(e.into()),
    };
    let fused = fuse([loss_g, loss_c, loss_s], &fusion.weights)?;
    if let Some(grad) = fused.grad_s {
        fusion.update(grad)?;
    }
    Ok(GStepStats {
        loss_g,
        loss_c,
        loss_s,
        lambda,
        fused: fused.value,
        mean_reward: reward,
        mean_len: len,
        skipped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DStepStats {
    /// Mean BCE before the update.
    pub loss: f64,
    /// Fraction classified correctly at 0.5, before the update.
    pub accuracy: f64,
}

/// One BCE/Adam step on explicit real (label 1) and fake (label 0) batches.
pub fn d_step_on(
    disc: &Discriminator,
    ps: &mut ParamSet,
    adam: &mut AdamState,
    real: &[&[TokenId]],
    fake: &[&[TokenId]],
) -> Result<DStepStats> {
    let n = (real.len() + fake.len()) as f64;
    if n == 0.0 {
        return Err(GanError::NoRealSequences);
    }
    let (mut loss, mut correct) = (0.0, 0usize);
    for (tokens, y) in real.iter().map(|t| (t, 1.0f32)).chain(fake.iter().map(|t| (t, 0.0))) {
        let cache = disc.forward(ps, tokens)?;
        let p = cache.prob;
        loss += f64::from(bce_loss(&[p], &[y])?.0);
        if (p > 0.5) == (y == 1.0) {
            correct += 1;
        }
        // d BCE / d logit = σ(z) − y
        disc.backward(ps, &cache, ((p - y) as f64 / n) as f32)?;
    }
    adam.step(ps).map_err(|e| GanError::Divergence(format!("d-step: {e}")))?;
    Ok(DStepStats { loss: loss / n, accuracy: correct as f64 / n })
}

/// Balanced d-step: `batch` real sequences drawn with replacement against
/// `batch` fresh generator samples.
#[allow(clippy::too_many_arguments)]
pub fn d_step<R: Rng + ?Sized>(
    disc: &Discriminator,
    disc_ps: &mut ParamSet,
    adam: &mut AdamState,
    real: &[TokenSequence],
    gen: &Generator,
    gen_ps: &ParamSet,
    ctx: &SamplingContext,
    batch: usize,
    rng: &mut R,
) -> Result<DStepStats> {
    if real.is_empty() {
        return Err(GanError::NoRealSequences);
    }
    let real_batch: Vec<&[TokenId]> = (0..batch).map(|_| real[rng.gen_range(0..real.len())].tokens.as_slice()).collect();
    let mut fake = Vec::with_capacity(batch);
    for _ in 0..batch {
        fake.push(sample_sequence(gen, gen_ps, ctx, rng, Policy::Sample, &[])?.tokens);
    }
    let fake_refs: Vec<&[TokenId]> = fake.iter().map(Vec::as_slice).collect();
    d_step_on(disc, disc_ps, adam, &real_batch, &fake_refs)
}
