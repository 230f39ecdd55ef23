//! Elementwise nonlinearities. Backward functions take whichever of the
//! input or output is cheaper to differentiate from.

use crate::error::{shape_err, Result};
use crate::Tensor;

fn map(x: &Tensor, f: impl Fn(f32) -> f32) -> Tensor {
    let data = x.data().iter().map(|&v| f(v)).collect();
    Tensor::from_vec(x.shape(), data).expect("same length")
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f32, f32) -> f32) -> Result<Tensor> {
    if a.len() != b.len() {
        return shape_err(format!(
            "elementwise backward: {:?} vs {:?}",
            a.shape(),
            b.shape()
        ));
    }
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::from_vec(a.shape(), data)
}

#[inline]
pub fn sigmoid_scalar(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn relu(x: &Tensor) -> Tensor {
    map(x, |v| v.max(0.0))
}

/// Takes the forward *input*.
pub fn relu_backward(x: &Tensor, dy: &Tensor) -> Result<Tensor> {
    zip_map(x, dy, |x, d| if x > 0.0 { d } else { 0.0 })
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    map(x, sigmoid_scalar)
}

/// Takes the forward *output*.
pub fn sigmoid_backward(y: &Tensor, dy: &Tensor) -> Result<Tensor> {
    zip_map(y, dy, |y, d| d * y * (1.0 - y))
}

pub fn tanh(x: &Tensor) -> Tensor {
    map(x, f32::tanh)
}

/// Takes the forward *output*.
pub fn tanh_backward(y: &Tensor, dy: &Tensor) -> Result<Tensor> {
    zip_map(y, dy, |y, d| d * (1.0 - y * y))
}
