//! Seeded parameter initialization.

use rand::Rng;

use crate::Tensor;

/// Uniform in `(-sqrt(1/fan_in), +sqrt(1/fan_in))`.
pub fn uniform_fan_in<R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor {
    let bound = (1.0 / fan_in.max(1) as f32).sqrt();
    uniform(shape, bound, rng)
}

pub fn uniform<R: Rng + ?Sized>(shape: &[usize], bound: f32, rng: &mut R) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor::from_vec(shape, data).expect("length matches shape by construction")
}
