use guigan_ndnet::dense::Dense;
use guigan_ndnet::embedding::Embedding;
use guigan_ndnet::lstm::{Lstm, LstmState};
use guigan_ndnet::{ParamSet, Tensor};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GanConfig, GanError, Result};
use crate::EmbeddingTable;

pub const GENERATOR_KIND: &str = "generator";

/// Token embedding → LSTM → vocabulary logits. Disallowed next tokens are
/// masked to `−∞` before the softmax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub vocab: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub next_mask: Vec<bool>,
}

impl Generator {
    pub fn new(vocab: usize, embed_dim: usize, hidden_dim: usize) -> Self {
        Self { vocab, embed_dim, hidden_dim, next_mask: vec![true; vocab] }
    }

    pub fn embedding(&self) -> Embedding {
        Embedding::new("gen.embed", self.vocab, self.embed_dim, None)
    }

    pub fn lstm(&self) -> Lstm {
        Lstm::new("gen.lstm", self.embed_dim, self.hidden_dim)
    }

    pub fn output(&self) -> Dense {
        Dense::new("gen.out", self.hidden_dim, self.vocab)
    }

    /// Random embedding table, LSTM and output layer.
    pub fn init_random<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.insert(
            self.embedding().table_name(),
            guigan_ndnet::init::uniform(&[self.vocab, self.embed_dim], 0.1, rng),
        );
        self.lstm().init(&mut ps, rng);
        self.output().init(&mut ps, rng);
        ps
    }

    pub fn apply_mask(&self, logits: &mut [f32]) {
        for (l, &ok) in logits.iter_mut().zip(&self.next_mask) {
            if !ok {
                *l = f32::NEG_INFINITY;
            }
        }
    }

    pub fn input(&self, ps: &ParamSet, token: usize) -> Result<Vec<f32>> {
        Ok(self.embedding().forward(ps, &[token])?.into_data())
    }

    /// Feeds `token` and returns the new state with the masked logits for
    /// the following position.
    pub fn step(&self, ps: &ParamSet, token: usize, state: &LstmState) -> Result<(LstmState, Vec<f32>)> {
        let x = self.input(ps, token)?;
        let (next, _) = self.lstm().step(ps, &x, state)?;
        let mut logits = self.output().forward(ps, &Tensor::from_vec(&[1, self.hidden_dim], next.h.clone())?)?.into_data();
        self.apply_mask(&mut logits);
        Ok((next, logits))
    }

    pub fn initial_state(&self) -> LstmState {
        LstmState::zeros(self.hidden_dim)
    }
}

/// Builds a generator whose embedding rows are a seeded random linear
/// projection of each token's style vector, rescaled to RMS 0.1. Tokens with
/// identical style vectors start with identical rows.
pub fn init_generator<R: Rng + ?Sized>(
    vocab: usize,
    embeddings: &EmbeddingTable,
    config: &GanConfig,
    rng: &mut R,
) -> Result<(Generator, ParamSet)> {
    config.validate()?;
    let gen = Generator::new(vocab, config.embed_dim, config.hidden_dim);
    let table = project_embeddings(vocab, embeddings, config.embed_dim, rng)?;
    let mut ps = ParamSet::new();
    ps.insert(gen.embedding().table_name(), table);
    gen.lstm().init(&mut ps, rng);
    gen.output().init(&mut ps, rng);
    Ok((gen, ps))
}

/// `[vocab, dim]` table of projected style vectors.
pub(crate) fn project_embeddings<R: Rng + ?Sized>(
    vocab: usize,
    embeddings: &EmbeddingTable,
    dim: usize,
    rng: &mut R,
) -> Result<Tensor> {
    let n = embeddings.dim();
    if n == 0 {
        return Err(GanError::MissingEmbedding(0));
    }
    let bound = (3.0 / n as f32).sqrt();
    let proj: Vec<f32> = (0..n * dim).map(|_| rng.gen_range(-bound..bound)).collect();
    let mut out = vec![0.0f32; vocab * dim];
    for id in 0..vocab {
        let v = embeddings.get(id).ok_or(GanError::MissingEmbedding(id))?;
        if v.len() != n {
            return Err(GanError::InvalidConfig(format!("embedding {id} has dimension {}, expected {n}", v.len())));
        }
        let row = &mut out[id * dim..(id + 1) * dim];
        for (k, &vk) in v.iter().enumerate() {
            for (r, p) in row.iter_mut().zip(&proj[k * dim..(k + 1) * dim]) {
                *r += vk * p;
            }
        }
    }
    let rms = (out.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>() / out.len() as f64).sqrt();
    if rms > 0.0 {
        let s = (0.1 / rms) as f32;
        out.iter_mut().for_each(|x| *x *= s);
    }
    Ok(Tensor::from_vec(&[vocab, dim], out)?)
}
