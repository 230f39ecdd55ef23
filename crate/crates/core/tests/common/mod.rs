//! Oracles and fixtures shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use guigan_core::corpus::SubtreeRepository;
use guigan_core::gan::{
    mle_gradient, policy_gradient, sample_sequence, Discriminator, FusionState, GanConfig, Generator, Policy,
    SamplingContext,
};
use guigan_core::eval::{one_nna, FeatureMatrix, Source};
use guigan_core::losses::{fuse, FusionWeights, WeightMode};
use guigan_core::style::{Siamese, SiameseConfig};
use guigan_core::synth::{synthetic_repository, SynthSpec};
use guigan_core::{EmbeddingTable, TokenSequence};
use guigan_ndnet::conv::{Conv2d, Padding};
use guigan_ndnet::embedding::Embedding;
use guigan_ndnet::highway::Highway;
use guigan_ndnet::gradcheck::{check_params, GradCheckReport, DEFAULT_EPS};
use guigan_ndnet::init::uniform;
use guigan_ndnet::{AdamConfig, AdamState, ParamSet, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `softplus(z) − y·z`, the BCE of `σ(z)` against `y`, in f64.
pub fn bce_from_logit(z: f32, y: f32) -> f64 {
    let z = f64::from(z);
    let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    softplus - f64::from(y) * z
}

pub fn tiny_siamese() -> SiameseConfig {
    SiameseConfig {
        input_size: (12, 8),
        base_filters: 2,
        kernels: vec![3, 2],
        padding: Padding::Same,
        embedding_dim: 5,
        ..SiameseConfig::desk()
    }
}

/// Distance of one tower from a switch: the smallest pre-ReLU magnitude and
/// the smallest gap between a 2x2 pool winner and a distinct runner-up.
fn tower_margin(cfg: &SiameseConfig, ps: &ParamSet, x: &Tensor) -> f32 {
    let mut margin = f32::INFINITY;
    let mut h = x.clone();
    let mut in_c = 3;
    for (i, (&k, f)) in cfg.kernels.iter().zip(cfg.filters()).enumerate() {
        let conv = Conv2d::new(&format!("conv{i}"), in_c, f, (k, k), cfg.padding);
        let (pre, _) = conv.forward(ps, &h).unwrap();
        margin = pre.data().iter().fold(margin, |m, v| m.min(v.abs()));
        let act = guigan_ndnet::activation::relu(&pre);
        let (hh, ww) = (act.shape()[1], act.shape()[2]);
        for c in 0..f {
            for oy in 0..hh / 2 {
                for ox in 0..ww / 2 {
                    let mut w: Vec<f32> = (0..4)
                        .map(|j| act.data()[(c * hh + 2 * oy + j / 2) * ww + 2 * ox + j % 2])
                        .collect();
                    w.sort_by(|a, b| b.total_cmp(a));
                    if let Some(second) = w.iter().find(|&&v| v != w[0]) {
                        margin = margin.min(w[0] - second);
                    }
                }
            }
        }
        h = guigan_ndnet::pool::maxpool2x2(&act).unwrap().0;
        in_c = f;
    }
    margin
}

/// Central differences through both towers and the weighted-L1 head. Inputs
/// are redrawn until no ReLU, pool or `|Va − Vb|` switch lies within reach
/// of the probe.
pub fn siamese_gradcheck(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let cfg = tiny_siamese();
    let model = Siamese::new(cfg.clone()).unwrap();
    let (mut ps, a, b) = loop {
        let ps = model.init(&mut r);
        let a = uniform(&[3, 12, 8], 1.0, &mut r);
        let b = uniform(&[3, 12, 8], 1.0, &mut r);
        let va = model.embed_tensor(&ps, &a).unwrap();
        let vb = model.embed_tensor(&ps, &b).unwrap();
        let head = va.iter().zip(&vb).fold(f32::INFINITY, |m, (x, y)| m.min((x - y).abs()));
        let margin = tower_margin(&cfg, &ps, &a).min(tower_margin(&cfg, &ps, &b)).min(head);
        if margin >= SIAMESE_MARGIN {
            break (ps, a, b);
        }
    };
    let y = if r.gen_bool(0.5) { 1.0 } else { 0.0 };
    let objective = |ps: &ParamSet| {
        let va = model.embed_tensor(ps, &a).unwrap();
        let vb = model.embed_tensor(ps, &b).unwrap();
        bce_from_logit(model.head_logit(ps, &va, &vb).unwrap(), y)
    };
    let (va, ca) = model.forward_embed(&ps, &a).unwrap();
    let (vb, cb) = model.forward_embed(&ps, &b).unwrap();
    let z = model.head_logit(&ps, &va, &vb).unwrap();
    let dz = guigan_ndnet::activation::sigmoid_scalar(z) - y;
    let (da, db) = model.head_backward(&mut ps, &va, &vb, dz).unwrap();
    model.backward_embed(&mut ps, &ca, &da).unwrap();
    model.backward_embed(&mut ps, &cb, &db).unwrap();
    check_params(&ps, DEFAULT_EPS, objective)
}

const SIAMESE_MARGIN: f32 = 0.005;

/// Distance of the discriminator's piecewise-linear points from a switch:
/// the gap between each max-over-time winner and the nearest distinct
/// runner-up, and the smallest highway pre-activation magnitude.
fn disc_margin(disc: &Discriminator, ps: &ParamSet, tokens: &[usize]) -> f32 {
    let x = Embedding::new("disc.embed", disc.vocab, disc.embed_dim, Some(disc.pad_id()))
        .forward(ps, &disc.padded_ids(tokens))
        .unwrap()
        .reshape(&[1, disc.max_len, disc.embed_dim])
        .unwrap();
    let mut margin = f32::INFINITY;
    let mut feats = Vec::new();
    for &k in &disc.kernels {
        let conv = Conv2d::new(&format!("disc.conv{k}"), 1, disc.filters, (k, disc.embed_dim), Padding::Valid);
        let (y, _) = conv.forward(ps, &x).unwrap();
        let per = y.len() / disc.filters;
        for row in y.data().chunks_exact(per) {
            let top = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            feats.push(top);
            let second = row.iter().copied().filter(|&v| v != top).fold(f32::NEG_INFINITY, f32::max);
            margin = margin.min(top - second);
        }
    }
    let hw = Highway::new("disc.highway", feats.len());
    let pre = hw.transform.forward(ps, &tensor(&[1, feats.len()], feats)).unwrap();
    pre.data().iter().fold(margin, |m, v| m.min(v.abs()))
}

/// Central differences through embedding, convolutions, max over time,
/// highway and the output layer. Draws are repeated until every max and
/// ReLU sits at least 0.02 from its switching point.
pub fn discriminator_gradcheck(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    loop {
        let vocab = r.gen_range(3..7);
        let disc = Discriminator::new(vocab, r.gen_range(2..6), r.gen_range(4..8), r.gen_range(2..5), vec![2, 3]);
        let table = uniform(&[vocab, disc.embed_dim], 1.0, &mut r);
        let mut ps = disc.init(table, &mut r);
        let len = r.gen_range(1..=disc.max_len);
        let tokens: Vec<usize> = (0..len).map(|_| r.gen_range(0..vocab)).collect();
        let y = if r.gen_bool(0.5) { 1.0 } else { 0.0 };
        if disc_margin(&disc, &ps, &tokens) < 0.02 {
            continue;
        }
        let cache = disc.forward(&ps, &tokens).unwrap();
        disc.backward(&mut ps, &cache, cache.prob - y).unwrap();
        return check_params(&ps, DEFAULT_EPS, |p| bce_from_logit(disc.forward(p, &tokens).unwrap().logit, y));
    }
}

/// Parameter values equal, ignoring gradient buffers.
pub fn same_values(a: &ParamSet, b: &ParamSet) -> bool {
    a.len() == b.len() && a.iter().all(|(n, t)| b.get(n).is_ok_and(|u| u.shape() == t.shape() && u.data() == t.data()))
}

/// Largest relative error of the analytic `∂fuse/∂s` against central
/// differences in f64 (step 1e-6).
pub fn fuse_gradcheck(seed: u64) -> f64 {
    let mut r = rng(seed);
    let s = [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
    let losses = [r.gen_range(0.0..3.0), r.gen_range(0.0..1.0), r.gen_range(0.0..1.0)];
    let w = |s: [f64; 3]| FusionWeights { mode: WeightMode::Trainable { s }, active: [true; 3] };
    let g = fuse(losses, &w(s)).unwrap().grad_s.unwrap();
    let h = 1e-6;
    (0..3)
        .map(|i| {
            let (mut sp, mut sm) = (s, s);
            sp[i] += h;
            sm[i] -= h;
            let num = (fuse(losses, &w(sp)).unwrap().value - fuse(losses, &w(sm)).unwrap().value) / (2.0 * h);
            (g[i] - num).abs() / g[i].abs().max(num.abs()).max(0.1)
        })
        .fold(0.0, f64::max)
}

/// Max |policy gradient with A ≡ 1 − MLE gradient| on sampled sequences
/// over a 3-token vocabulary.
pub fn pg_vs_mle(seed: u64) -> f64 {
    let mut r = rng(seed);
    let gen = Generator::new(3, 6, 5);
    let ps = gen.init_random(&mut r);
    let ctx = SamplingContext::new(3, vec![0, 1, 2], BTreeSet::new(), vec![1; 3], 1000, 6).unwrap();
    let seqs: Vec<TokenSequence> = (0..8)
        .map(|_| sample_sequence(&gen, &ps, &ctx, &mut r, Policy::Sample, &[]).unwrap())
        .collect();
    let ones: Vec<Vec<f32>> = seqs.iter().map(|s| vec![1.0; s.len()]).collect();
    let mut pg = ps.clone();
    policy_gradient(&gen, &mut pg, &seqs, &ones).unwrap();
    let mut mle = ps.clone();
    let refs: Vec<&[usize]> = seqs.iter().map(|s| s.tokens.as_slice()).collect();
    mle_gradient(&gen, &mut mle, &refs, 1.0 / seqs.len() as f32).unwrap();
    let mut worst = 0.0f64;
    for (name, t) in pg.iter() {
        let a = t.grad().unwrap();
        let b = mle.get(name).unwrap().grad().unwrap();
        for (x, y) in a.iter().zip(b) {
            worst = worst.max(f64::from((x - y).abs()));
        }
    }
    worst
}

/// Two tokens A=0, B=1; sequences are `[A, x]`; the scorer likes `A, B`.
/// Returns π(B | A) before and after each of `steps` g-steps.
pub fn bandit_trajectory(seed: u64, steps: usize) -> Vec<f64> {
    let mut r = rng(seed);
    let gen = Generator::new(2, 4, 4);
    let mut ps = gen.init_random(&mut r);
    let ctx = SamplingContext::new(2, vec![0], BTreeSet::new(), vec![1, 1], 1000, 2).unwrap();
    let config = GanConfig { batch: 32, rollout_count: 1, ..GanConfig::default() };
    let mut adam = AdamState::new(AdamConfig::with_lr(config.lr));
    let mut fusion = FusionState::new(FusionWeights::fixed([1.0, 0.0, 0.0]), config.lr);
    let scorer = |t: &[usize]| if t.len() >= 2 && t[0] == 0 && t[1] == 1 { 0.9 } else { 0.1 };
    let pi_b = |ps: &ParamSet| {
        let (_, logits) = gen.step(ps, 0, &gen.initial_state()).unwrap();
        f64::from(guigan_ndnet::loss::softmax(&logits)[1])
    };
    let mut out = vec![pi_b(&ps)];
    for _ in 0..steps {
        guigan_core::gan::g_step(&gen, &mut ps, &mut adam, &scorer, &ctx, None, &mut fusion, &config, &mut r).unwrap();
        out.push(pi_b(&ps));
    }
    out
}

/// Trailing moving average.
pub fn smooth(xs: &[f64], window: usize) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            let lo = i.saturating_sub(window - 1);
            xs[lo..=i].iter().sum::<f64>() / (i - lo + 1) as f64
        })
        .collect()
}

/// Synthetic repository and its real sequences.
pub fn synthetic(seed: u64, apps: usize, screens: usize) -> (SubtreeRepository, Vec<TokenSequence>) {
    synthetic_repository(&SynthSpec::new(seed, apps, screens)).unwrap()
}

/// Cheap stand-in for learned style vectors: the mean crop color.
pub fn color_embeddings(repo: &SubtreeRepository) -> EmbeddingTable {
    let mut t = EmbeddingTable::new();
    for s in &repo.subtrees {
        let n = f64::from(s.crop.width() * s.crop.height()).max(1.0);
        let mut m = [0.0f64; 3];
        for p in s.crop.pixels() {
            for c in 0..3 {
                m[c] += f64::from(p[c]) / 255.0;
            }
        }
        t.insert(s.id, m.iter().map(|v| (v / n) as f32).collect());
    }
    t
}

pub fn tensor(shape: &[usize], data: Vec<f32>) -> Tensor {
    Tensor::from_vec(shape, data).unwrap()
}

pub fn gaussian_rows(r: &mut ChaCha8Rng, n: usize, d: usize, mean: f64, sd: f64) -> Vec<Vec<f64>> {
    let normal = rand_distr::Normal::new(mean, sd).unwrap();
    (0..n).map(|_| (0..d).map(|_| r.sample(normal)).collect()).collect()
}

pub fn features(rows: &[Vec<f64>], source: Source) -> FeatureMatrix {
    FeatureMatrix::from_rows(rows, source).unwrap()
}

/// `2d` points `μ ± c_k e_k` whose sample mean is `μ` and whose unbiased
/// sample covariance is exactly `diag(a)`.
pub fn diagonal_design(a: &[f64], mu: &[f64]) -> Vec<Vec<f64>> {
    let d = a.len();
    let n = 2 * d;
    let mut rows = Vec::with_capacity(n);
    for (k, &ak) in a.iter().enumerate() {
        let c = (ak * (n as f64 - 1.0) / 2.0).sqrt();
        for sign in [1.0, -1.0] {
            let mut p = mu.to_vec();
            p[k] += sign * c;
            rows.push(p);
        }
    }
    rows
}

/// Closed-form Fréchet distance for equal means and diagonal covariances,
/// each carrying the estimator's ridge `ε·I`.
pub fn diagonal_fid_oracle(a: &[f64], b: &[f64], ridge: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x + ridge).sqrt() - (y + ridge).sqrt()).powi(2)).sum()
}

/// Orthogonal factor of the QR decomposition of a Gaussian matrix.
pub fn random_orthogonal(r: &mut ChaCha8Rng, d: usize) -> nalgebra::DMatrix<f64> {
    let g = gaussian_rows(r, d, d, 0.0, 1.0);
    nalgebra::DMatrix::from_fn(d, d, |i, j| g[i][j]).qr().q()
}

pub fn transform(rows: &[Vec<f64>], q: &nalgebra::DMatrix<f64>, offset: f64) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|p| (q * nalgebra::DVector::from_column_slice(p)).iter().map(|v| v + offset).collect())
        .collect()
}

/// 1-NNA between two independent draws from the same Gaussian.
pub fn same_distribution_nna(seed: u64, n: usize, d: usize) -> f64 {
    let mut r = rng(seed);
    let a = gaussian_rows(&mut r, n, d, 0.0, 1.0);
    let b = gaussian_rows(&mut r, n, d, 0.0, 1.0);
    one_nna(&features(&a, Source::Real), &features(&b, Source::Generated)).unwrap()
}

/// 1-NNA of a set against a noisy copy of itself, for increasing noise.
pub fn noise_trend(seed: u64, levels: &[f64]) -> Vec<f64> {
    let mut r = rng(seed);
    let a = gaussian_rows(&mut r, 100, 4, 0.0, 1.0);
    levels
        .iter()
        .map(|&sd| {
            let b: Vec<Vec<f64>> = a
                .iter()
                .map(|p| p.iter().map(|v| v + if sd > 0.0 { r.sample(rand_distr::Normal::new(0.0, sd).unwrap()) } else { 0.0 }).collect())
                .collect();
            one_nna(&features(&a, Source::Real), &features(&b, Source::Generated)).unwrap()
        })
        .collect()
}

/// Levenshtein distance by memoized recursion over suffixes, written
/// independently of the table-filling implementation.
pub fn levenshtein_oracle(a: &[u8], b: &[u8]) -> usize {
    fn go(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut std::collections::HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j, memo).min(go(a, b, i, j + 1, memo)).min(go(a, b, i + 1, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut std::collections::HashMap::new())
}

/// `1 − H(C|K)/H(C)` from raw contingency counts; 1 when `H(C) = 0`.
pub fn homogeneity_oracle(classes: &[usize], clusters: &[usize]) -> f64 {
    let n = classes.len() as f64;
    let mut joint = std::collections::BTreeMap::<(usize, usize), f64>::new();
    let mut class_n = std::collections::BTreeMap::<usize, f64>::new();
    let mut cluster_n = std::collections::BTreeMap::<usize, f64>::new();
    for (&c, &k) in classes.iter().zip(clusters) {
        *joint.entry((c, k)).or_default() += 1.0;
        *class_n.entry(c).or_default() += 1.0;
        *cluster_n.entry(k).or_default() += 1.0;
    }
    let h_c: f64 = class_n.values().map(|&m| -(m / n) * (m / n).ln()).sum();
    if h_c == 0.0 {
        return 1.0;
    }
    let h_c_given_k: f64 = joint.iter().map(|(&(_, k), &m)| -(m / n) * (m / cluster_n[&k]).ln()).sum();
    1.0 - h_c_given_k / h_c
}
