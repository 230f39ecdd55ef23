//! Max pooling: 2×2 windows with stride 2, and a global per-channel max
//! (max-over-time when the spatial extent is a sequence).

use crate::error::{shape_err, Result};
use crate::Tensor;

#[derive(Clone, Debug)]
pub struct PoolCache {
    argmax: Vec<usize>,
    input_shape: Vec<usize>,
}

/// `[c, h, w] -> [c, h/2, w/2]`; trailing odd rows/columns are dropped.
/// Ties resolve to the first element in row-major window order.
pub fn maxpool2x2(x: &Tensor) -> Result<(Tensor, PoolCache)> {
    x.expect_rank(3, "maxpool input")?;
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (oh, ow) = (h / 2, w / 2);
    if oh == 0 || ow == 0 {
        return shape_err(format!("maxpool needs at least 2×2, got {h}×{w}"));
    }
    let data = x.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ci in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = usize::MAX;
                let mut best_v = f32::NEG_INFINITY;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let idx = (ci * h + 2 * oy + dy) * w + 2 * ox + dx;
                        if best == usize::MAX || data[idx] > best_v {
                            best = idx;
                            best_v = data[idx];
                        }
                    }
                }
                out.push(best_v);
                argmax.push(best);
            }
        }
    }
    Ok((
        Tensor::from_vec(&[c, oh, ow], out)?,
        PoolCache {
            argmax,
            input_shape: x.shape().to_vec(),
        },
    ))
}

/// `[c, ...] -> [c]`, maximum over everything after the channel axis.
pub fn global_max(x: &Tensor) -> Result<(Tensor, PoolCache)> {
    if x.shape().len() < 2 {
        return shape_err(format!("global max needs [c, ...], got {:?}", x.shape()));
    }
    let c = x.shape()[0];
    let per = x.len() / c;
    if per == 0 {
        return shape_err("global max over an empty extent");
    }
    let mut out = Vec::with_capacity(c);
    let mut argmax = Vec::with_capacity(c);
    for (ci, chunk) in x.data().chunks_exact(per).enumerate() {
        let (i, v) = chunk
            .iter()
            .enumerate()
            .fold((0, f32::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv || i == 0 {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        out.push(v);
        argmax.push(ci * per + i);
    }
    Ok((
        Tensor::from_vec(&[c], out)?,
        PoolCache {
            argmax,
            input_shape: x.shape().to_vec(),
        },
    ))
}

/// Routes each output gradient to the input element that won the max.
pub fn max_backward(cache: &PoolCache, dy: &Tensor) -> Result<Tensor> {
    if dy.len() != cache.argmax.len() {
        return shape_err(format!(
            "pool upstream gradient has {} elements, expected {}",
            dy.len(),
            cache.argmax.len()
        ));
    }
    let mut dx = Tensor::zeros(&cache.input_shape);
    let buf = dx.data_mut();
    for (&i, &g) in cache.argmax.iter().zip(dy.data()) {
        buf[i] += g;
    }
    Ok(dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxpool_picks_max_and_routes_gradient_there() {
        let x = Tensor::from_vec(&[1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (y, cache) = maxpool2x2(&x).unwrap();
        assert_eq!(y.data(), &[4.0]);
        let dx = max_backward(&cache, &Tensor::from_vec(&[1, 1, 1], vec![1.5]).unwrap()).unwrap();
        assert_eq!(dx.data(), &[0.0, 0.0, 0.0, 1.5]);
    }

    #[test]
    fn maxpool_drops_odd_tail() {
        let x = Tensor::from_vec(&[1, 3, 3], (0..9).map(|v| v as f32).collect()).unwrap();
        let (y, _) = maxpool2x2(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1]);
        assert_eq!(y.data(), &[4.0]);
    }

    #[test]
    fn global_max_per_channel() {
        let x = Tensor::from_vec(&[2, 3, 1], vec![0.0, 5.0, 1.0, -3.0, -1.0, -2.0]).unwrap();
        let (y, cache) = global_max(&x).unwrap();
        assert_eq!(y.data(), &[5.0, -1.0]);
        let dx = max_backward(&cache, &Tensor::from_vec(&[2], vec![1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(dx.data(), &[0.0, 1.0, 0.0, 0.0, 2.0, 0.0]);
    }
}
