use guigan_ndnet::activation::{relu, relu_backward, sigmoid_scalar};
use guigan_ndnet::checkpoint::Checkpoint;
use guigan_ndnet::conv::{Conv2d, Conv2dCache};
use guigan_ndnet::dense::Dense;
use guigan_ndnet::init::uniform;
use guigan_ndnet::pool::{max_backward, maxpool2x2, PoolCache};
use guigan_ndnet::{ParamSet, Tensor};
use image::RgbImage;
use rand::Rng;
use rayon::prelude::*;

use super::{to_input, Result, SiameseConfig, StyleError};
use crate::corpus::SubtreeRepository;
use crate::EmbeddingTable;

pub const SIAMESE_KIND: &str = "siamese";

const HEAD_W: &str = "head.weight";
const HEAD_B: &str = "head.bias";

/// Shared tower (conv → relu → pool blocks, flatten, linear) plus the
/// weighted-L1 pair head. Both inputs of a pair go through the same params.
#[derive(Clone, Debug)]
pub struct Siamese {
    pub config: SiameseConfig,
    convs: Vec<Conv2d>,
    fc: Dense,
}

#[derive(Debug)]
struct BlockCache {
    conv: Conv2dCache,
    pre_relu: Tensor,
    pool: PoolCache,
}

#[derive(Debug)]
pub struct EmbedCache {
    blocks: Vec<BlockCache>,
    flat: Tensor,
}

impl Siamese {
    pub fn new(config: SiameseConfig) -> Result<Self> {
        config.validate()?;
        let mut in_c = 3;
        let convs = config
            .kernels
            .iter()
            .zip(config.filters())
            .enumerate()
            .map(|(i, (&k, f))| {
                let c = Conv2d::new(&format!("conv{i}"), in_c, f, (k, k), config.padding);
                in_c = f;
                c
            })
            .collect();
        let fc = Dense::new("fc", config.flat_dim(), config.embedding_dim);
        Ok(Self { config, convs, fc })
    }

    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamSet {
        let mut ps = ParamSet::new();
        for c in &self.convs {
            c.init(&mut ps, rng);
        }
        self.fc.init(&mut ps, rng);
        let n = self.config.embedding_dim;
        ps.insert(HEAD_W, uniform(&[n], (1.0 / n as f32).sqrt(), rng));
        ps.insert(HEAD_B, Tensor::zeros(&[1]));
        ps
    }

    /// Every parameter zero.
    pub fn zeros(&self) -> ParamSet {
        let mut ps = self.init(&mut rand::rngs::mock::StepRng::new(0, 0));
        for (_, t) in ps.iter_mut() {
            t.data_mut().fill(0.0);
        }
        ps
    }

    pub fn forward_embed(&self, ps: &ParamSet, x: &Tensor) -> Result<(Vec<f32>, EmbedCache)> {
        let mut h = x.clone();
        let mut blocks = Vec::with_capacity(self.convs.len());
        for conv in &self.convs {
            let (pre, cc) = conv.forward(ps, &h)?;
            let (pooled, pc) = maxpool2x2(&relu(&pre))?;
            blocks.push(BlockCache { conv: cc, pre_relu: pre, pool: pc });
            h = pooled;
        }
        let flat = h.flatten();
        let v = self.fc.forward(ps, &flat)?.into_data();
        Ok((v, EmbedCache { blocks, flat }))
    }

    /// Accumulates parameter gradients for `dL/dV`.
    pub fn backward_embed(&self, ps: &mut ParamSet, cache: &EmbedCache, dv: &[f32]) -> Result<()> {
        let dv = Tensor::from_vec(&[1, dv.len()], dv.to_vec())?;
        let mut d = self.fc.backward(ps, &cache.flat, &dv)?;
        for (conv, bc) in self.convs.iter().zip(&cache.blocks).rev() {
            let dpool = max_backward(&bc.pool, &d)?;
            let dpre = relu_backward(&bc.pre_relu, &dpool)?;
            d = conv.backward(ps, &bc.conv, &dpre)?;
        }
        Ok(())
    }

    pub fn embed_tensor(&self, ps: &ParamSet, x: &Tensor) -> Result<Vec<f32>> {
        Ok(self.forward_embed(ps, x)?.0)
    }

    pub fn embed(&self, ps: &ParamSet, img: &RgbImage) -> Result<Vec<f32>> {
        self.embed_tensor(ps, &to_input(img, &self.config)?)
    }

    /// Embeddings of many images, in input order.
    pub fn embed_batch(&self, ps: &ParamSet, imgs: &[RgbImage]) -> Result<Vec<Vec<f32>>> {
        imgs.par_iter().map(|img| self.embed(ps, img)).collect()
    }

    pub fn embed_repository(&self, ps: &ParamSet, repo: &SubtreeRepository) -> Result<EmbeddingTable> {
        let vectors: Vec<Vec<f32>> = repo
            .subtrees
            .par_iter()
            .map(|t| self.embed(ps, &t.crop))
            .collect::<Result<_>>()?;
        let mut table = EmbeddingTable::new();
        for (t, v) in repo.subtrees.iter().zip(vectors) {
            table.insert(t.id, v);
        }
        Ok(table)
    }

    /// Pre-sigmoid head score `Σ w_k |a_k − b_k| + b`.
    pub fn head_logit(&self, ps: &ParamSet, va: &[f32], vb: &[f32]) -> Result<f32> {
        let w = ps.get(HEAD_W)?;
        let b = ps.get(HEAD_B)?.data()[0];
        if va.len() != w.len() || vb.len() != w.len() {
            return Err(StyleError::Net(guigan_ndnet::NdError::ShapeMismatch(format!(
                "pair head expects two {}-vectors, got {} and {}",
                w.len(),
                va.len(),
                vb.len()
            ))));
        }
        Ok(w.data().iter().zip(va.iter().zip(vb)).map(|(w, (a, b))| w * (a - b).abs()).sum::<f32>() + b)
    }

    pub fn pair_probability(&self, ps: &ParamSet, va: &[f32], vb: &[f32]) -> Result<f32> {
        Ok(sigmoid_scalar(self.head_logit(ps, va, vb)?))
    }

    /// Accumulates head gradients for `dL/dlogit` and returns `(dL/dVa, dL/dVb)`.
    pub fn head_backward(&self, ps: &mut ParamSet, va: &[f32], vb: &[f32], dlogit: f32) -> Result<(Vec<f32>, Vec<f32>)> {
        ps.get_mut(HEAD_B)?.grad_mut()[0] += dlogit;
        let (w, wg) = ps.get_mut(HEAD_W)?.data_and_grad_mut();
        let mut da = vec![0.0; va.len()];
        let mut db = vec![0.0; vb.len()];
        for k in 0..w.len() {
            let diff = va[k] - vb[k];
            wg[k] += dlogit * diff.abs();
            let s = if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                -1.0
            } else {
                0.0
            };
            da[k] = dlogit * w[k] * s;
            db[k] = -da[k];
        }
        Ok((da, db))
    }

    /// Same-app probability of two crops.
    pub fn forward_pair(&self, ps: &ParamSet, a: &RgbImage, b: &RgbImage) -> Result<f32> {
        let va = self.embed(ps, a)?;
        let vb = self.embed(ps, b)?;
        self.pair_probability(ps, &va, &vb)
    }

    pub fn to_checkpoint(&self, ps: &ParamSet) -> Checkpoint {
        Checkpoint::new(
            SIAMESE_KIND,
            ps.clone(),
            serde_json::to_value(&self.config).expect("config serializes"),
        )
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<(Self, ParamSet)> {
        if ck.kind != SIAMESE_KIND {
            return Err(StyleError::InvalidConfig(format!("checkpoint kind {:?} is not {SIAMESE_KIND:?}", ck.kind)));
        }
        let config: SiameseConfig = serde_json::from_value(ck.hyperparameters)
            .map_err(|e| StyleError::InvalidConfig(format!("checkpoint hyperparameters: {e}")))?;
        let model = Self::new(config)?;
        let expected = model.zeros();
        for (name, t) in expected.iter() {
            let got = ck.params.get(name)?;
            if got.shape() != t.shape() {
                return Err(StyleError::InvalidConfig(format!(
                    "checkpoint param {name} has shape {:?}, expected {:?}",
                    got.shape(),
                    t.shape()
                )));
            }
        }
        Ok((model, ck.params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use guigan_ndnet::conv::Padding;
    use image::Rgb;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn tiny() -> SiameseConfig {
        SiameseConfig {
            input_size: (16, 8),
            base_filters: 2,
            kernels: vec![3, 3],
            padding: Padding::Same,
            embedding_dim: 4,
            ..SiameseConfig::desk()
        }
    }

    fn img(seed: u8) -> RgbImage {
        RgbImage::from_fn(8, 16, |x, y| Rgb([seed.wrapping_mul(31).wrapping_add((x * 7 + y) as u8), 40, 200]))
    }

    #[test]
    fn identical_inputs_give_sigmoid_of_bias() {
        let m = Siamese::new(tiny()).unwrap();
        let mut ps = m.init(&mut ChaCha8Rng::seed_from_u64(0));
        ps.get_mut(HEAD_B).unwrap().data_mut()[0] = 0.7;
        let p = m.forward_pair(&ps, &img(1), &img(1)).unwrap();
        assert!((p - sigmoid_scalar(0.7)).abs() < 1e-7);
    }

    #[test]
    fn symmetric_in_inputs() {
        let m = Siamese::new(tiny()).unwrap();
        let ps = m.init(&mut ChaCha8Rng::seed_from_u64(3));
        let ab = m.forward_pair(&ps, &img(1), &img(2)).unwrap();
        let ba = m.forward_pair(&ps, &img(2), &img(1)).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn zero_image_through_zero_params_is_zero() {
        let m = Siamese::new(SiameseConfig::desk()).unwrap();
        let v = m.embed(&m.zeros(), &RgbImage::new(32, 64)).unwrap();
        assert_eq!(v.len(), 64);
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn batch_embedding_matches_single() {
        let m = Siamese::new(tiny()).unwrap();
        let ps = m.init(&mut ChaCha8Rng::seed_from_u64(5));
        let imgs = [img(1), img(2), img(3)];
        let batch = m.embed_batch(&ps, &imgs).unwrap();
        for (i, v) in imgs.iter().zip(&batch) {
            assert_eq!(&m.embed(&ps, i).unwrap(), v);
        }
    }

    #[test]
    fn checkpoint_roundtrip() {
        let m = Siamese::new(tiny()).unwrap();
        let ps = m.init(&mut ChaCha8Rng::seed_from_u64(9));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        m.to_checkpoint(&ps).save(&path).unwrap();
        let (m2, ps2) = Siamese::from_checkpoint(Checkpoint::load(&path).unwrap()).unwrap();
        assert_eq!(m2.config, m.config);
        assert_eq!(m.embed(&ps, &img(4)).unwrap(), m2.embed(&ps2, &img(4)).unwrap());
    }
}
