//! Highway layer: `y = t ⊙ H(x) + (1 − t) ⊙ x` with
//! `H(x) = relu(W_h x + b_h)` and `t = σ(W_t x + b_t)`.

use rand::Rng;

use crate::activation::{relu, relu_backward, sigmoid, sigmoid_backward};
use crate::dense::Dense;
use crate::error::{shape_err, Result};
use crate::{ParamSet, Tensor};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Highway {
    pub transform: Dense,
    pub gate: Dense,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct HighwayCache {
    x: Tensor,
    pre_h: Tensor,
    h: Tensor,
    t: Tensor,
}

impl Highway {
    pub fn new(prefix: &str, dim: usize) -> Self {
        Self {
            transform: Dense::new(&format!("{prefix}.transform"), dim, dim),
            gate: Dense::new(&format!("{prefix}.gate"), dim, dim),
            dim,
        }
    }

    pub fn init<R: Rng + ?Sized>(&self, ps: &mut ParamSet, rng: &mut R) {
        self.transform.init(ps, rng);
        self.gate.init(ps, rng);
    }

    /// `x` is `[n, dim]`.
    pub fn forward(&self, ps: &ParamSet, x: &Tensor) -> Result<(Tensor, HighwayCache)> {
        if x.shape().last() != Some(&self.dim) {
            return shape_err(format!("highway expects [n, {}], got {:?}", self.dim, x.shape()));
        }
        let pre_h = self.transform.forward(ps, x)?;
        let h = relu(&pre_h);
        let t = sigmoid(&self.gate.forward(ps, x)?);
        let y: Vec<f32> = (0..x.len())
            .map(|k| t.data()[k] * h.data()[k] + (1.0 - t.data()[k]) * x.data()[k])
            .collect();
        let y = Tensor::from_vec(h.shape(), y)?;
        Ok((
            y,
            HighwayCache {
                x: x.clone(),
                pre_h,
                h,
                t,
            },
        ))
    }

    pub fn backward(&self, ps: &mut ParamSet, cache: &HighwayCache, dy: &Tensor) -> Result<Tensor> {
        let n = cache.x.len();
        if dy.len() != n {
            return shape_err("highway upstream gradient length mismatch");
        }
        let (x, h, t) = (cache.x.data(), cache.h.data(), cache.t.data());
        let dyv = dy.data();
        let dh: Vec<f32> = (0..n).map(|k| dyv[k] * t[k]).collect();
        let dt: Vec<f32> = (0..n).map(|k| dyv[k] * (h[k] - x[k])).collect();
        let mut dx: Vec<f32> = (0..n).map(|k| dyv[k] * (1.0 - t[k])).collect();

        let shape = cache.h.shape();
        let dpre_h = relu_backward(&cache.pre_h, &Tensor::from_vec(shape, dh)?)?;
        let dx_h = self.transform.backward(ps, &cache.x, &dpre_h)?;
        let dpre_t = sigmoid_backward(&cache.t, &Tensor::from_vec(shape, dt)?)?;
        let dx_t = self.gate.backward(ps, &cache.x, &dpre_t)?;
        for k in 0..n {
            dx[k] += dx_h.data()[k] + dx_t.data()[k];
        }
        Tensor::from_vec(cache.x.shape(), dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn setup(gate_bias: f32) -> (Highway, ParamSet, Tensor) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let hw = Highway::new("hw", 6);
        let mut ps = ParamSet::new();
        hw.init(&mut ps, &mut rng);
        ps.get_mut("hw.gate.bias").unwrap().data_mut().fill(gate_bias);
        let x = crate::init::uniform(&[2, 6], 1.0, &mut rng);
        (hw, ps, x)
    }

    #[test]
    fn closed_gate_carries_input() {
        let (hw, ps, x) = setup(-10.0);
        let (y, _) = hw.forward(&ps, &x).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn open_gate_passes_transform() {
        let (hw, ps, x) = setup(10.0);
        let (y, _) = hw.forward(&ps, &x).unwrap();
        let h = relu(&hw.transform.forward(&ps, &x).unwrap());
        for (a, b) in y.data().iter().zip(h.data()) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }
}
