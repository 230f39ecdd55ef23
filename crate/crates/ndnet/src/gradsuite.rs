//! Randomized finite-difference checks for every layer in this crate.
//!
//! Each function builds a layer with shapes drawn from `seed`, projects its
//! output onto a random direction to get a scalar objective, backpropagates
//! that direction and compares every parameter and input gradient against
//! central differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activation::{relu, relu_backward, sigmoid, sigmoid_backward, tanh, tanh_backward};
use crate::conv::{Conv2d, Padding};
use crate::dense::Dense;
use crate::embedding::Embedding;
use crate::gradcheck::{check_params, check_slice, project, GradCheckReport, DEFAULT_EPS};
use crate::highway::Highway;
use crate::init::uniform;
use crate::loss::bce_loss;
use crate::lstm::{Lstm, LstmState};
use crate::pool::{global_max, max_backward, maxpool2x2};
use crate::{ParamSet, Tensor};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Uniform values in `(-scale, scale)` with `|v| >= margin`, so ReLU kinks sit
/// well outside the finite-difference probe.
fn away_from_zero(rng: &mut ChaCha8Rng, shape: &[usize], scale: f32, margin: f32) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let m = rng.gen_range(margin..scale);
            if rng.gen_bool(0.5) { m } else { -m }
        })
        .collect();
    Tensor::from_vec(shape, data).unwrap()
}

/// Distinct values spaced 0.01 apart in random order: no two pooling
/// candidates are within a probe step of each other.
fn distinct_values(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    use rand::seq::SliceRandom;
    let n: usize = shape.iter().product();
    let mut data: Vec<f32> = (0..n).map(|k| k as f32 * 0.01 - 0.5).collect();
    data.shuffle(rng);
    Tensor::from_vec(shape, data).unwrap()
}

fn input_check(
    label: &str,
    x: &Tensor,
    dx: &Tensor,
    mut f: impl FnMut(&Tensor) -> f64,
) -> GradCheckReport {
    let mut values = x.data().to_vec();
    let shape = x.shape().to_vec();
    check_slice(label, &mut values, dx.data(), DEFAULT_EPS, |v| {
        f(&Tensor::from_vec(&shape, v.to_vec()).expect("same shape"))
    })
}

pub fn dense(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let (n, i, o) = (r.gen_range(1..4), r.gen_range(1..7), r.gen_range(1..6));
    let layer = Dense::new("d", i, o);
    let mut ps = ParamSet::new();
    layer.init(&mut ps, &mut r);
    let x = uniform(&[n, i], 1.0, &mut r);
    let dir = direction(&mut r, n * o);
    let dy = Tensor::from_vec(&[n, o], dir.clone()).unwrap();
    let dx = layer.backward(&mut ps, &x, &dy).unwrap();
    let mut rep = check_params(&ps, DEFAULT_EPS, |p| {
        project(layer.forward(p, &x).unwrap().data(), &dir)
    });
    rep.merge(input_check("dense.x", &x, &dx, |x| {
        project(layer.forward(&ps, x).unwrap().data(), &dir)
    }));
    rep
}

pub fn conv2d(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let padding = if seed.is_multiple_of(2) { Padding::Same } else { Padding::Valid };
    let (c, oc) = (r.gen_range(1..3), r.gen_range(1..4));
    let kernel = (r.gen_range(1..4), r.gen_range(1..4));
    let (h, w) = (r.gen_range(kernel.0..6), r.gen_range(kernel.1..6));
    let layer = Conv2d::new("c", c, oc, kernel, padding);
    let mut ps = ParamSet::new();
    layer.init(&mut ps, &mut r);
    let x = uniform(&[c, h, w], 1.0, &mut r);
    let (y, cache) = layer.forward(&ps, &x).unwrap();
    let dir = direction(&mut r, y.len());
    let dy = Tensor::from_vec(y.shape(), dir.clone()).unwrap();
    let dx = layer.backward(&mut ps, &cache, &dy).unwrap();
    let mut rep = check_params(&ps, DEFAULT_EPS, |p| {
        project(layer.forward(p, &x).unwrap().0.data(), &dir)
    });
    rep.merge(input_check("conv.x", &x, &dx, |x| {
        project(layer.forward(&ps, x).unwrap().0.data(), &dir)
    }));
    rep
}

pub fn maxpool(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let (c, h, w) = (r.gen_range(1..3), r.gen_range(2..7), r.gen_range(2..7));
    let x = distinct_values(&mut r, &[c, h, w]);
    let (y, cache) = maxpool2x2(&x).unwrap();
    let dir = direction(&mut r, y.len());
    let dx = max_backward(&cache, &Tensor::from_vec(y.shape(), dir.clone()).unwrap()).unwrap();
    let mut rep = input_check("maxpool.x", &x, &dx, |x| {
        project(maxpool2x2(x).unwrap().0.data(), &dir)
    });
    let (g, gcache) = global_max(&x).unwrap();
    let gdir = direction(&mut r, g.len());
    let gdx = max_backward(&gcache, &Tensor::from_vec(g.shape(), gdir.clone()).unwrap()).unwrap();
    rep.merge(input_check("global_max.x", &x, &gdx, |x| {
        project(global_max(x).unwrap().0.data(), &gdir)
    }));
    rep
}

pub fn activations(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let n = r.gen_range(1..12);
    let x = away_from_zero(&mut r, &[n], 2.0, 0.01);
    let dir = direction(&mut r, n);
    let dy = Tensor::from_vec(&[n], dir.clone()).unwrap();
    let mut rep = input_check("relu.x", &x, &relu_backward(&x, &dy).unwrap(), |x| {
        project(relu(x).data(), &dir)
    });
    rep.merge(input_check("sigmoid.x", &x, &sigmoid_backward(&sigmoid(&x), &dy).unwrap(), |x| {
        project(sigmoid(x).data(), &dir)
    }));
    rep.merge(input_check("tanh.x", &x, &tanh_backward(&tanh(&x), &dy).unwrap(), |x| {
        project(tanh(x).data(), &dir)
    }));
    rep
}

pub fn embedding(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let (v, d) = (r.gen_range(2..6), r.gen_range(1..5));
    let emb = Embedding::new("e", v, d, Some(v));
    let mut ps = ParamSet::new();
    ps.insert("e", uniform(&[v, d], 1.0, &mut r));
    let ids: Vec<usize> = (0..r.gen_range(1..6)).map(|_| r.gen_range(0..=v)).collect();
    let dir = direction(&mut r, ids.len() * d);
    emb.backward(&mut ps, &ids, &Tensor::from_vec(&[ids.len(), d], dir.clone()).unwrap())
        .unwrap();
    check_params(&ps, DEFAULT_EPS, |p| project(emb.forward(p, &ids).unwrap().data(), &dir))
}

/// Three-step sequence with gradient on every output and on the final cell.
pub fn lstm(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let (d, h) = (r.gen_range(1..5), r.gen_range(1..5));
    let layer = Lstm::new("l", d, h);
    let mut ps = ParamSet::new();
    layer.init(&mut ps, &mut r);
    let xs = uniform(&[3, d], 1.0, &mut r);
    let init = LstmState {
        h: direction(&mut r, h),
        c: direction(&mut r, h),
    };
    let dir = direction(&mut r, 3 * h);
    let cdir = direction(&mut r, h);
    let objective = |p: &ParamSet, xs: &Tensor, init: &LstmState| {
        let (hs, last, _) = layer.sequence(p, xs, init).unwrap();
        project(hs.data(), &dir) + project(&last.c, &cdir)
    };
    let (_, _, caches) = layer.sequence(&ps, &xs, &init).unwrap();
    let final_grad = LstmState {
        h: vec![0.0; h],
        c: cdir.clone(),
    };
    let (dxs, dinit) = layer
        .sequence_backward(
            &mut ps,
            &caches,
            &Tensor::from_vec(&[3, h], dir.clone()).unwrap(),
            Some(&final_grad),
        )
        .unwrap();
    let mut rep = check_params(&ps, DEFAULT_EPS, |p| objective(p, &xs, &init));
    rep.merge(input_check("lstm.xs", &xs, &dxs, |x| objective(&ps, x, &init)));
    let mut h0 = init.h.clone();
    rep.merge(check_slice("lstm.h0", &mut h0, &dinit.h, DEFAULT_EPS, |v| {
        objective(&ps, &xs, &LstmState { h: v.to_vec(), c: init.c.clone() })
    }));
    let mut c0 = init.c.clone();
    rep.merge(check_slice("lstm.c0", &mut c0, &dinit.c, DEFAULT_EPS, |v| {
        objective(&ps, &xs, &LstmState { h: init.h.clone(), c: v.to_vec() })
    }));
    rep
}

pub fn highway(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let (n, d) = (r.gen_range(1..4), r.gen_range(1..6));
    let layer = Highway::new("hw", d);
    let mut ps = ParamSet::new();
    let x = loop {
        layer.init(&mut ps, &mut r);
        let x = uniform(&[n, d], 1.0, &mut r);
        // Probing any weight or input moves a transform pre-activation by at
        // most ~eps·d; redraw until none sits that close to the ReLU kink.
        let pre = layer.transform.forward(&ps, &x).unwrap();
        if pre.data().iter().all(|v| v.abs() > 0.02) {
            break x;
        }
    };
    let dir = direction(&mut r, n * d);
    let (_, cache) = layer.forward(&ps, &x).unwrap();
    let dx = layer
        .backward(&mut ps, &cache, &Tensor::from_vec(&[n, d], dir.clone()).unwrap())
        .unwrap();
    let mut rep = check_params(&ps, DEFAULT_EPS, |p| {
        project(layer.forward(p, &x).unwrap().0.data(), &dir)
    });
    rep.merge(input_check("highway.x", &x, &dx, |x| {
        project(layer.forward(&ps, x).unwrap().0.data(), &dir)
    }));
    rep
}

pub fn bce(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let n = r.gen_range(1..6);
    let mut p: Vec<f32> = (0..n).map(|_| r.gen_range(0.05..0.95)).collect();
    let y: Vec<f32> = (0..n).map(|_| if r.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
    let (_, g) = bce_loss(&p, &y).unwrap();
    // The objective is evaluated in f64 so the check sees the formula, not
    // f32 rounding of the log.
    check_slice("bce.p", &mut p, &g, DEFAULT_EPS, |p| {
        p.iter()
            .zip(&y)
            .map(|(&p, &y)| {
                let (p, y) = (p as f64, y as f64);
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum()
    })
}

/// dense → tanh → dense, backpropagated layer by layer and checked against a
/// finite difference of the fused forward.
pub fn composed(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let (n, i, hdim, o) = (
        r.gen_range(1..3),
        r.gen_range(1..5),
        r.gen_range(1..5),
        r.gen_range(1..4),
    );
    let first = Dense::new("a", i, hdim);
    let second = Dense::new("b", hdim, o);
    let mut ps = ParamSet::new();
    first.init(&mut ps, &mut r);
    second.init(&mut ps, &mut r);
    let x = uniform(&[n, i], 1.0, &mut r);
    let dir = direction(&mut r, n * o);
    let fused = |p: &ParamSet, x: &Tensor| {
        let h = tanh(&first.forward(p, x).unwrap());
        project(second.forward(p, &h).unwrap().data(), &dir)
    };
    let a = first.forward(&ps, &x).unwrap();
    let h = tanh(&a);
    let dh = second
        .backward(&mut ps, &h, &Tensor::from_vec(&[n, o], dir.clone()).unwrap())
        .unwrap();
    let da = tanh_backward(&h, &dh).unwrap();
    let dx = first.backward(&mut ps, &x, &da).unwrap();
    let mut rep = check_params(&ps, DEFAULT_EPS, |p| fused(p, &x));
    rep.merge(input_check("composed.x", &x, &dx, |x| fused(&ps, x)));
    rep
}

/// Every layer check, keyed by name.
pub fn all() -> Vec<(&'static str, fn(u64) -> GradCheckReport)> {
    vec![
        ("dense", dense),
        ("conv2d", conv2d),
        ("maxpool", maxpool),
        ("activations", activations),
        ("embedding", embedding),
        ("lstm", lstm),
        ("highway", highway),
        ("bce", bce),
        ("composed", composed),
    ]
}
