//! Scalar losses returning `(loss, dloss/dinput)`.

use crate::error::{shape_err, Result};

/// Probabilities are clamped into `[BCE_EPS, 1 - BCE_EPS]` before the logs.
pub const BCE_EPS: f32 = 1e-7;

/// Binary cross entropy summed over the batch:
/// `−Σ (y log p + (1 − y) log(1 − p))`.
///
/// The returned gradient is that of the clamped function, so it is zero for
/// predictions that sit outside the clamp range.
pub fn bce_loss(p: &[f32], y: &[f32]) -> Result<(f32, Vec<f32>)> {
    if p.len() != y.len() {
        return shape_err(format!("bce: {} predictions vs {} targets", p.len(), y.len()));
    }
    let mut loss = 0.0f64;
    let mut grad = Vec::with_capacity(p.len());
    for (&pi, &yi) in p.iter().zip(y) {
        let q = pi.clamp(BCE_EPS, 1.0 - BCE_EPS);
        loss -= (yi as f64) * (q as f64).ln() + (1.0 - yi as f64) * (1.0 - q as f64).ln();
        let inside = pi > BCE_EPS && pi < 1.0 - BCE_EPS;
        grad.push(if inside { -yi / q + (1.0 - yi) / (1.0 - q) } else { 0.0 });
    }
    Ok((loss as f32, grad))
}

pub fn log_softmax(logits: &[f32]) -> Vec<f32> {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    if !max.is_finite() {
        return vec![f32::NEG_INFINITY; logits.len()];
    }
    let lse = logits
        .iter()
        .map(|&v| ((v - max) as f64).exp())
        .sum::<f64>()
        .ln() as f32
        + max;
    logits.iter().map(|&v| v - lse).collect()
}

pub fn softmax(logits: &[f32]) -> Vec<f32> {
    log_softmax(logits).into_iter().map(f32::exp).collect()
}

/// `−log softmax(logits)[target]` and its gradient `softmax − onehot`.
pub fn softmax_cross_entropy(logits: &[f32], target: usize) -> Result<(f32, Vec<f32>)> {
    if target >= logits.len() {
        return shape_err(format!(
            "cross entropy target {target} outside {} classes",
            logits.len()
        ));
    }
    let logp = log_softmax(logits);
    let mut grad: Vec<f32> = logp.iter().map(|v| v.exp()).collect();
    grad[target] -= 1.0;
    Ok((-logp[target], grad))
}
