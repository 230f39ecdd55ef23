use guigan_ndnet::activation::sigmoid_scalar;
use guigan_ndnet::conv::{Conv2d, Conv2dCache, Padding};
use guigan_ndnet::dense::Dense;
use guigan_ndnet::embedding::Embedding;
use guigan_ndnet::highway::{Highway, HighwayCache};
use guigan_ndnet::pool::{global_max, max_backward, PoolCache};
use guigan_ndnet::{ParamSet, Tensor};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Result;
use crate::TokenId;

pub const DISCRIMINATOR_KIND: &str = "discriminator";

/// Token-embedding matrix `[max_len, dim]` (pad rows zero) → parallel
/// full-width convolutions over the sequence axis → max over time →
/// concatenation → highway → linear → sigmoid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discriminator {
    pub vocab: usize,
    pub embed_dim: usize,
    pub max_len: usize,
    pub filters: usize,
    pub kernels: Vec<usize>,
}

#[derive(Debug)]
pub struct DiscCache {
    ids: Vec<usize>,
    branches: Vec<(Conv2dCache, PoolCache)>,
    highway: HighwayCache,
    features: Tensor,
    pub logit: f32,
    pub prob: f32,
}

impl Discriminator {
    pub fn new(vocab: usize, embed_dim: usize, max_len: usize, filters: usize, kernels: Vec<usize>) -> Self {
        Self { vocab, embed_dim, max_len, filters, kernels }
    }

    pub fn pad_id(&self) -> usize {
        self.vocab
    }

    fn embedding(&self) -> Embedding {
        Embedding::new("disc.embed", self.vocab, self.embed_dim, Some(self.pad_id()))
    }

    fn convs(&self) -> Vec<Conv2d> {
        self.kernels
            .iter()
            .map(|&k| Conv2d::new(&format!("disc.conv{k}"), 1, self.filters, (k, self.embed_dim), Padding::Valid))
            .collect()
    }

    fn feature_dim(&self) -> usize {
        self.filters * self.kernels.len()
    }

    fn highway(&self) -> Highway {
        Highway::new("disc.highway", self.feature_dim())
    }

    fn output(&self) -> Dense {
        Dense::new("disc.out", self.feature_dim(), 1)
    }

    /// Random layers; the embedding table is copied from `table` (`[vocab, dim]`).
    pub fn init<R: Rng + ?Sized>(&self, table: Tensor, rng: &mut R) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.insert(self.embedding().table_name(), table);
        for c in self.convs() {
            c.init(&mut ps, rng);
        }
        self.highway().init(&mut ps, rng);
        self.output().init(&mut ps, rng);
        ps
    }

    /// Every parameter zero.
    pub fn zeros(&self) -> ParamSet {
        let mut ps = self.init(
            Tensor::zeros(&[self.vocab, self.embed_dim]),
            &mut rand::rngs::mock::StepRng::new(0, 0),
        );
        for (_, t) in ps.iter_mut() {
            t.data_mut().fill(0.0);
        }
        ps
    }

    /// Truncates to `max_len` and pads with the zero row.
    pub fn padded_ids(&self, tokens: &[TokenId]) -> Vec<usize> {
        let mut ids: Vec<usize> = tokens.iter().take(self.max_len).copied().collect();
        ids.resize(self.max_len, self.pad_id());
        ids
    }

    pub fn forward_ids(&self, ps: &ParamSet, ids: Vec<usize>) -> Result<DiscCache> {
        let x = self.embedding().forward(ps, &ids)?.reshape(&[1, self.max_len, self.embed_dim])?;
        let mut branches = Vec::with_capacity(self.kernels.len());
        let mut feats = Vec::with_capacity(self.feature_dim());
        for conv in self.convs() {
            let (y, cc) = conv.forward(ps, &x)?;
            let (m, pc) = global_max(&y)?;
            feats.extend_from_slice(m.data());
            branches.push((cc, pc));
        }
        let features = Tensor::from_vec(&[1, self.feature_dim()], feats)?;
        let (hw, highway) = self.highway().forward(ps, &features)?;
        let logit = self.output().forward(ps, &hw)?.data()[0];
        Ok(DiscCache { ids, branches, highway, features: hw, logit, prob: sigmoid_scalar(logit) })
    }

    pub fn forward(&self, ps: &ParamSet, tokens: &[TokenId]) -> Result<DiscCache> {
        self.forward_ids(ps, self.padded_ids(tokens))
    }

    /// Probability that `tokens` is a real sequence.
    pub fn prob(&self, ps: &ParamSet, tokens: &[TokenId]) -> Result<f32> {
        Ok(self.forward(ps, tokens)?.prob)
    }

    /// Accumulates parameter gradients for `dL/dlogit`.
    pub fn backward(&self, ps: &mut ParamSet, cache: &DiscCache, dlogit: f32) -> Result<()> {
        let dhw = self.output().backward(ps, &cache.features, &Tensor::from_vec(&[1, 1], vec![dlogit])?)?;
        let dfeat = self.highway().backward(ps, &cache.highway, &dhw)?;
        let mut dx = Tensor::zeros(&[1, self.max_len, self.embed_dim]);
        for (i, (conv, (cc, pc))) in self.convs().iter().zip(&cache.branches).enumerate() {
            let dm = Tensor::from_vec(&[self.filters], dfeat.data()[i * self.filters..(i + 1) * self.filters].to_vec())?;
            let dy = max_backward(pc, &dm)?;
            let d = conv.backward(ps, cc, &dy)?;
            for (a, b) in dx.data_mut().iter_mut().zip(d.data()) {
                *a += b;
            }
        }
        let dx = dx.reshape(&[self.max_len, self.embed_dim])?;
        self.embedding().backward(ps, &cache.ids, &dx)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn disc() -> Discriminator {
        Discriminator::new(5, 6, 8, 4, vec![2, 3])
    }

    #[test]
    fn zero_params_give_one_half() {
        let d = disc();
        assert_eq!(d.prob(&d.zeros(), &[0, 1, 2]).unwrap(), 0.5);
    }

    #[test]
    fn pad_tail_is_inert() {
        let d = disc();
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let ps = d.init(guigan_ndnet::init::uniform(&[5, 6], 0.5, &mut r), &mut r);
        let a = d.prob(&ps, &[1, 2]).unwrap();
        let mut ids = d.padded_ids(&[1, 2]);
        ids[2..].reverse();
        let b = d.forward_ids(&ps, ids).unwrap().prob;
        assert_eq!(a, b);
        assert_eq!(d.padded_ids(&[0; 20]).len(), 8);
    }

    #[test]
    fn pad_rows_get_no_gradient() {
        let d = disc();
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let mut ps = d.init(guigan_ndnet::init::uniform(&[5, 6], 0.5, &mut r), &mut r);
        let cache = d.forward(&ps, &[1]).unwrap();
        d.backward(&mut ps, &cache, 1.0).unwrap();
        let g = ps.get("disc.embed").unwrap().grad().unwrap();
        for id in [0, 2, 3, 4] {
            assert!(g[id * 6..(id + 1) * 6].iter().all(|&x| x == 0.0));
        }
    }
}
