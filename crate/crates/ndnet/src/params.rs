use std::collections::BTreeMap;

use crate::error::{NdError, Result};
use crate::Tensor;

pub const PARAMSET_FORMAT_VERSION: u32 = 1;

/// Named trainable parameters. Iteration order is the sorted name order,
/// which is also the order used by checkpoints and the optimizer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    params: BTreeMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Option<Tensor> {
        self.params.insert(name.into(), tensor)
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.params
            .get(name)
            .ok_or_else(|| NdError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.params
            .get_mut(name)
            .ok_or_else(|| NdError::UnknownParam(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.params.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.params.values().map(Tensor::len).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params.values_mut().for_each(Tensor::zero_grad);
    }

    /// Adds `other`'s gradients into ours. Both sets must hold the same names
    /// and shapes (typically `other` is a clone used by a worker).
    pub fn accumulate_grads_from(&mut self, other: &ParamSet) -> Result<()> {
        for (name, t) in self.params.iter_mut() {
            let src = other.get(name)?;
            if src.shape() != t.shape() {
                return Err(NdError::ShapeMismatch(format!(
                    "gradient source for `{name}` has shape {:?}, expected {:?}",
                    src.shape(),
                    t.shape()
                )));
            }
            if let Some(g) = src.grad() {
                for (d, s) in t.grad_mut().iter_mut().zip(g) {
                    *d += s;
                }
            }
        }
        Ok(())
    }

    /// Scales every gradient buffer in place.
    pub fn scale_grads(&mut self, factor: f32) {
        for t in self.params.values_mut() {
            if t.grad().is_some() {
                t.grad_mut().iter_mut().for_each(|g| *g *= factor);
            }
        }
    }

    pub fn grad_l2_norm(&self) -> f64 {
        self.params
            .values()
            .filter_map(Tensor::grad)
            .flat_map(|g| g.iter())
            .map(|&g| (g as f64) * (g as f64))
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_names_are_errors() {
        let ps = ParamSet::new();
        assert!(matches!(ps.get("w"), Err(NdError::UnknownParam(_))));
    }

    #[test]
    fn accumulate_and_scale() {
        let mut a = ParamSet::new();
        a.insert("w", Tensor::zeros(&[2]));
        let mut b = a.clone();
        b.get_mut("w").unwrap().grad_mut().copy_from_slice(&[1.0, 2.0]);
        a.accumulate_grads_from(&b).unwrap();
        a.accumulate_grads_from(&b).unwrap();
        a.scale_grads(0.5);
        assert_eq!(a.get("w").unwrap().grad().unwrap(), &[1.0, 2.0]);
        assert!((a.grad_l2_norm() - 5f64.sqrt()).abs() < 1e-12);
    }
}
