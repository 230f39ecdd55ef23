use std::collections::BTreeMap;

use guigan_ndnet::activation::sigmoid_scalar;
use guigan_ndnet::loss::bce_loss;
use guigan_ndnet::{AdamConfig, AdamState, ParamSet, Tensor};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{heldout_split, sample_pairs, to_input, Pair, Result, Siamese, SiameseConfig, StyleError};
use crate::corpus::SubtreeRepository;
use crate::TokenId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 0 is the untrained network.
    pub epoch: usize,
    /// Mean pair BCE over the epoch (held-out pairs at epoch 0).
    pub loss: f64,
    pub heldout_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainedSiamese {
    pub model: Siamese,
    pub params: ParamSet,
    pub log: Vec<EpochLog>,
}

struct Inputs(BTreeMap<TokenId, Tensor>);

impl Inputs {
    fn build(repo: &SubtreeRepository, config: &SiameseConfig) -> Result<Self> {
        repo.subtrees
            .iter()
            .map(|t| Ok((t.id, to_input(&t.crop, config)?)))
            .collect::<Result<_>>()
            .map(Self)
    }

    fn get(&self, id: TokenId) -> Result<&Tensor> {
        self.0.get(&id).ok_or(StyleError::UnknownToken(id))
    }
}

fn unique_ids(pairs: &[Pair]) -> Vec<TokenId> {
    let mut ids: Vec<TokenId> = pairs.iter().flat_map(|p| [p.a, p.b]).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Fraction of pairs whose same-app probability lands on the right side of 0.5,
/// and their mean BCE.
fn evaluate_pairs(model: &Siamese, ps: &ParamSet, inputs: &Inputs, pairs: &[Pair]) -> Result<(f64, f64)> {
    if pairs.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let mut emb = BTreeMap::new();
    for id in unique_ids(pairs) {
        emb.insert(id, model.embed_tensor(ps, inputs.get(id)?)?);
    }
    let mut correct = 0usize;
    let mut probs = Vec::with_capacity(pairs.len());
    let mut labels = Vec::with_capacity(pairs.len());
    for p in pairs {
        let prob = model.pair_probability(ps, &emb[&p.a], &emb[&p.b])?;
        if (prob > 0.5) == (p.label == 1) {
            correct += 1;
        }
        probs.push(prob);
        labels.push(f32::from(p.label));
    }
    let (loss, _) = bce_loss(&probs, &labels)?;
    Ok((correct as f64 / pairs.len() as f64, f64::from(loss) / pairs.len() as f64))
}

/// Held-out pair accuracy of arbitrary params on given pairs.
pub fn pair_accuracy(model: &Siamese, ps: &ParamSet, repo: &SubtreeRepository, pairs: &[Pair]) -> Result<f64> {
    let inputs = Inputs::build(repo, &model.config)?;
    Ok(evaluate_pairs(model, ps, &inputs, pairs)?.0)
}

/// One minibatch: each distinct crop goes forward and backward once.
/// Returns the mean BCE; gradients are left in `ps`.
fn batch_gradients(model: &Siamese, ps: &mut ParamSet, inputs: &Inputs, batch: &[Pair]) -> Result<f64> {
    let ids = unique_ids(batch);
    let mut fwd = BTreeMap::new();
    for &id in &ids {
        fwd.insert(id, model.forward_embed(ps, inputs.get(id)?)?);
    }
    let scale = 1.0 / batch.len() as f32;
    let mut dv: BTreeMap<TokenId, Vec<f32>> = ids.iter().map(|&id| (id, vec![0.0; model.config.embedding_dim])).collect();
    let mut total = 0.0;
    for p in batch {
        let (va, vb) = (&fwd[&p.a].0, &fwd[&p.b].0);
        let z = model.head_logit(ps, va, vb)?;
        let prob = sigmoid_scalar(z);
        let (loss, g) = bce_loss(&[prob], &[f32::from(p.label)])?;
        total += f64::from(loss);
        let dz = g[0] * prob * (1.0 - prob) * scale;
        let (da, db) = model.head_backward(ps, va, vb, dz)?;
        for (acc, d) in dv.get_mut(&p.a).expect("id present").iter_mut().zip(&da) {
            *acc += d;
        }
        for (acc, d) in dv.get_mut(&p.b).expect("id present").iter_mut().zip(&db) {
            *acc += d;
        }
    }
    for id in ids {
        model.backward_embed(ps, &fwd[&id].1, &dv[&id])?;
    }
    Ok(total / batch.len() as f64)
}

/// Minimizes pair BCE with Adam over freshly sampled pairs each epoch and
/// records held-out pair accuracy after every epoch.
pub fn train_siamese<R: Rng + ?Sized>(config: &SiameseConfig, repo: &SubtreeRepository, rng: &mut R) -> Result<TrainedSiamese> {
    let model = Siamese::new(config.clone())?;
    let split = heldout_split(repo, config.heldout_frac, rng);
    let heldout = if split.heldout.is_empty() {
        Vec::new()
    } else {
        sample_pairs(&split.heldout, rng, config.heldout_pairs)?
    };
    // Fail early on corpora too small to sample training pairs from.
    sample_pairs(&split.train, rng, 2)?;
    let inputs = Inputs::build(repo, config)?;
    let mut ps = model.init(rng);
    let mut adam = AdamState::new(AdamConfig::with_lr(config.lr));

    let (acc0, loss0) = evaluate_pairs(&model, &ps, &inputs, &heldout)?;
    let mut log = vec![EpochLog { epoch: 0, loss: loss0, heldout_accuracy: acc0 }];
    log::info!("siamese epoch 0: heldout loss {loss0:.4}, accuracy {acc0:.3}");

    for epoch in 1..=config.epochs {
        let pairs = sample_pairs(&split.train, rng, config.pairs_per_epoch)?;
        let mut sum = 0.0;
        for batch in pairs.chunks(config.batch) {
            let last_good = ps.clone();
            let loss = batch_gradients(&model, &mut ps, &inputs, batch)?;
            let diverged = |reason: String, ps: ParamSet| StyleError::Divergence { epoch, reason, last_good: Box::new(ps) };
            if !loss.is_finite() {
                return Err(diverged(format!("loss {loss}"), last_good));
            }
            if let Err(e) = adam.step(&mut ps) {
                return Err(diverged(e.to_string(), last_good));
            }
            sum += loss * batch.len() as f64;
        }
        let loss = sum / pairs.len() as f64;
        let (acc, _) = evaluate_pairs(&model, &ps, &inputs, &heldout)?;
        log::info!("siamese epoch {epoch}: loss {loss:.4}, heldout accuracy {acc:.3}");
        log.push(EpochLog { epoch, loss, heldout_accuracy: acc });
    }
    Ok(TrainedSiamese { model, params: ps, log })
}
