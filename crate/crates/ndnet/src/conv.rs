//! Stride-1 2-D convolution over a single `[channels, height, width]` image,
//! lowered to a matrix product via im2col.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};
use crate::init::uniform_fan_in;
use crate::linalg::{gemm_acc, gemm_at_b_acc, gemm_a_bt_acc};
use crate::{ParamSet, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// No padding; output shrinks by `kernel - 1`.
    Valid,
    /// Zero padding so the output keeps the input size. Even kernels put the
    /// extra row/column at the bottom/right.
    Same,
}

impl Padding {
    /// Leading and trailing padding for one spatial axis.
    pub fn amounts(self, kernel: usize) -> (usize, usize) {
        match self {
            Padding::Valid => (0, 0),
            Padding::Same => {
                let lead = (kernel - 1) / 2;
                (lead, kernel - 1 - lead)
            }
        }
    }

    /// Output length along one axis, or `None` if the kernel does not fit.
    pub fn output_len(self, input: usize, kernel: usize) -> Option<usize> {
        let (a, b) = self.amounts(kernel);
        (input + a + b).checked_sub(kernel).map(|v| v + 1).filter(|&v| v > 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conv2d {
    weight: String,
    bias: String,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub padding: Padding,
}

/// What the backward pass needs from the forward pass.
#[derive(Clone, Debug)]
pub struct Conv2dCache {
    cols: Vec<f32>,
    input_shape: [usize; 3],
    output_hw: (usize, usize),
}

impl Conv2d {
    pub fn new(
        prefix: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        padding: Padding,
    ) -> Self {
        Self {
            weight: format!("{prefix}.weight"),
            bias: format!("{prefix}.bias"),
            in_channels,
            out_channels,
            kernel,
            padding,
        }
    }

    pub fn weight_name(&self) -> &str {
        &self.weight
    }

    pub fn bias_name(&self) -> &str {
        &self.bias
    }

    fn fan_in(&self) -> usize {
        self.in_channels * self.kernel.0 * self.kernel.1
    }

    pub fn init<R: Rng + ?Sized>(&self, ps: &mut ParamSet, rng: &mut R) {
        let (kh, kw) = self.kernel;
        ps.insert(
            self.weight.clone(),
            uniform_fan_in(&[self.out_channels, self.in_channels, kh, kw], self.fan_in(), rng),
        );
        ps.insert(
            self.bias.clone(),
            uniform_fan_in(&[self.out_channels], self.fan_in(), rng),
        );
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        Some((
            self.padding.output_len(h, self.kernel.0)?,
            self.padding.output_len(w, self.kernel.1)?,
        ))
    }

    pub fn forward(&self, ps: &ParamSet, x: &Tensor) -> Result<(Tensor, Conv2dCache)> {
        x.expect_rank(3, "conv2d input")?;
        let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        if c != self.in_channels {
            return shape_err(format!(
                "conv2d expects {} input channels, got {c}",
                self.in_channels
            ));
        }
        let Some((oh, ow)) = self.output_hw(h, w) else {
            return shape_err(format!(
                "conv2d kernel {:?} does not fit a {h}×{w} input",
                self.kernel
            ));
        };
        let (kh, kw) = self.kernel;
        let wt = ps.get(&self.weight)?;
        let bias = ps.get(&self.bias)?;
        wt.expect_shape(&[self.out_channels, c, kh, kw], "conv2d weight")?;
        bias.expect_shape(&[self.out_channels], "conv2d bias")?;

        let cols = im2col(x.data(), c, h, w, self.kernel, self.padding, oh, ow);
        let k = c * kh * kw;
        let p = oh * ow;
        let mut y = Vec::with_capacity(self.out_channels * p);
        for &b in bias.data() {
            y.extend(std::iter::repeat_n(b, p));
        }
        gemm_acc(self.out_channels, k, p, wt.data(), &cols, &mut y);
        let out = Tensor::from_vec(&[self.out_channels, oh, ow], y)?;
        Ok((
            out,
            Conv2dCache {
                cols,
                input_shape: [c, h, w],
                output_hw: (oh, ow),
            },
        ))
    }

    pub fn backward(
        &self,
        ps: &mut ParamSet,
        cache: &Conv2dCache,
        dy: &Tensor,
    ) -> Result<Tensor> {
        let [c, h, w] = cache.input_shape;
        let (oh, ow) = cache.output_hw;
        let p = oh * ow;
        if dy.len() != self.out_channels * p {
            return shape_err(format!(
                "conv2d upstream gradient has {} elements, expected {}",
                dy.len(),
                self.out_channels * p
            ));
        }
        let (kh, kw) = self.kernel;
        let k = c * kh * kw;
        let mut dcols = vec![0.0; k * p];
        {
            let (wt, wg) = ps.get_mut(&self.weight)?.data_and_grad_mut();
            // dW (oc×k) += dY (oc×p) · colsᵀ (p×k)
            gemm_a_bt_acc(self.out_channels, p, k, dy.data(), &cache.cols, wg);
            // dcols (k×p) = Wᵀ (k×oc) · dY (oc×p)
            gemm_at_b_acc(k, self.out_channels, p, wt, dy.data(), &mut dcols);
        }
        let bg = ps.get_mut(&self.bias)?.grad_mut();
        for (g, row) in bg.iter_mut().zip(dy.data().chunks_exact(p)) {
            *g += row.iter().sum::<f32>();
        }
        let dx = col2im(&dcols, c, h, w, self.kernel, self.padding, oh, ow);
        Tensor::from_vec(&[c, h, w], dx)
    }
}

#[allow(clippy::too_many_arguments)]
fn im2col(
    x: &[f32],
    c: usize,
    h: usize,
    w: usize,
    (kh, kw): (usize, usize),
    padding: Padding,
    oh: usize,
    ow: usize,
) -> Vec<f32> {
    let (pt, _) = padding.amounts(kh);
    let (pl, _) = padding.amounts(kw);
    let p = oh * ow;
    let mut cols = vec![0.0; c * kh * kw * p];
    for ci in 0..c {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ci * kh + ki) * kw + kj;
                let dst = &mut cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let iy = oy + ki;
                    if iy < pt || iy - pt >= h {
                        continue;
                    }
                    let src_row = &x[(ci * h + iy - pt) * w..(ci * h + iy - pt + 1) * w];
                    let out_row = &mut dst[oy * ow..(oy + 1) * ow];
                    for (ox, o) in out_row.iter_mut().enumerate() {
                        let ix = ox + kj;
                        if ix >= pl && ix - pl < w {
                            *o = src_row[ix - pl];
                        }
                    }
                }
            }
        }
    }
    cols
}

#[allow(clippy::too_many_arguments)]
fn col2im(
    cols: &[f32],
    c: usize,
    h: usize,
    w: usize,
    (kh, kw): (usize, usize),
    padding: Padding,
    oh: usize,
    ow: usize,
) -> Vec<f32> {
    let (pt, _) = padding.amounts(kh);
    let (pl, _) = padding.amounts(kw);
    let p = oh * ow;
    let mut dx = vec![0.0; c * h * w];
    for ci in 0..c {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ci * kh + ki) * kw + kj;
                let src = &cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let iy = oy + ki;
                    if iy < pt || iy - pt >= h {
                        continue;
                    }
                    let base = (ci * h + iy - pt) * w;
                    for ox in 0..ow {
                        let ix = ox + kj;
                        if ix >= pl && ix - pl < w {
                            dx[base + ix - pl] += src[oy * ow + ox];
                        }
                    }
                }
            }
        }
    }
    dx
}
