//! Fully connected layer over a batch of row vectors.

use rand::Rng;

use crate::error::{shape_err, Result};
use crate::init::uniform_fan_in;
use crate::linalg::{gemm_a_bt_acc, gemm_acc, gemm_at_b_acc};
use crate::{ParamSet, Tensor};

/// `y = x Wᵀ + b` with `W` of shape `[out, in]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dense {
    weight: String,
    bias: String,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Dense {
    pub fn new(prefix: &str, in_dim: usize, out_dim: usize) -> Self {
        Self {
            weight: format!("{prefix}.weight"),
            bias: format!("{prefix}.bias"),
            in_dim,
            out_dim,
        }
    }

    pub fn init<R: Rng + ?Sized>(&self, ps: &mut ParamSet, rng: &mut R) {
        ps.insert(
            self.weight.clone(),
            uniform_fan_in(&[self.out_dim, self.in_dim], self.in_dim, rng),
        );
        ps.insert(
            self.bias.clone(),
            uniform_fan_in(&[self.out_dim], self.in_dim, rng),
        );
    }

    pub fn weight_name(&self) -> &str {
        &self.weight
    }

    pub fn bias_name(&self) -> &str {
        &self.bias
    }

    fn rows(&self, x: &Tensor) -> Result<usize> {
        match x.shape() {
            [n, d] if *d == self.in_dim => Ok(*n),
            [d] if *d == self.in_dim => Ok(1),
            s => shape_err(format!("dense expects [n, {}], got {:?}", self.in_dim, s)),
        }
    }

    /// `x` is `[n, in]` (or `[in]`, treated as one row); output is `[n, out]`.
    pub fn forward(&self, ps: &ParamSet, x: &Tensor) -> Result<Tensor> {
        let n = self.rows(x)?;
        let w = ps.get(&self.weight)?;
        let b = ps.get(&self.bias)?;
        w.expect_shape(&[self.out_dim, self.in_dim], "dense weight")?;
        b.expect_shape(&[self.out_dim], "dense bias")?;
        let mut y = Vec::with_capacity(n * self.out_dim);
        for _ in 0..n {
            y.extend_from_slice(b.data());
        }
        gemm_a_bt_acc(n, self.in_dim, self.out_dim, x.data(), w.data(), &mut y);
        Tensor::from_vec(&[n, self.out_dim], y)
    }

    /// Accumulates into the weight and bias gradients and returns `dL/dx`
    /// with the same shape as `x`.
    pub fn backward(&self, ps: &mut ParamSet, x: &Tensor, dy: &Tensor) -> Result<Tensor> {
        let n = self.rows(x)?;
        if dy.len() != n * self.out_dim {
            return shape_err(format!(
                "dense upstream gradient has {} elements, expected {}",
                dy.len(),
                n * self.out_dim
            ));
        }
        let mut dx = vec![0.0; n * self.in_dim];
        {
            let (w, wg) = ps.get_mut(&self.weight)?.data_and_grad_mut();
            // dW (out×in) += dyᵀ (out×n) · x (n×in)
            gemm_at_b_acc(self.out_dim, n, self.in_dim, dy.data(), x.data(), wg);
            // dx (n×in) = dy (n×out) · W (out×in)
            gemm_acc(n, self.out_dim, self.in_dim, dy.data(), w, &mut dx);
        }
        let bg = ps.get_mut(&self.bias)?.grad_mut();
        for row in dy.data().chunks_exact(self.out_dim) {
            for (g, d) in bg.iter_mut().zip(row) {
                *g += d;
            }
        }
        Tensor::from_vec(x.shape(), dx)
    }
}
