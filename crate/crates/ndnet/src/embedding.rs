//! Embedding table lookup with an optional all-zero padding row.

use crate::error::{shape_err, Result};
use crate::{ParamSet, Tensor};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    table: String,
    pub vocab: usize,
    pub dim: usize,
    /// Ids equal to this look up a zero vector and receive no gradient.
    pub pad_id: Option<usize>,
}

impl Embedding {
    pub fn new(name: &str, vocab: usize, dim: usize, pad_id: Option<usize>) -> Self {
        Self {
            table: name.to_string(),
            vocab,
            dim,
            pad_id,
        }
    }

    pub fn table_name(&self) -> &str {
        &self.table
    }

    /// `ids -> [ids.len(), dim]`.
    pub fn forward(&self, ps: &ParamSet, ids: &[usize]) -> Result<Tensor> {
        let t = ps.get(&self.table)?;
        t.expect_shape(&[self.vocab, self.dim], "embedding table")?;
        let mut out = Vec::with_capacity(ids.len() * self.dim);
        for &id in ids {
            if Some(id) == self.pad_id {
                out.extend(std::iter::repeat_n(0.0, self.dim));
                continue;
            }
            if id >= self.vocab {
                return shape_err(format!("token id {id} outside vocabulary of {}", self.vocab));
            }
            out.extend_from_slice(&t.data()[id * self.dim..(id + 1) * self.dim]);
        }
        Tensor::from_vec(&[ids.len(), self.dim], out)
    }

    /// Scatter-adds row gradients back into the table.
    pub fn backward(&self, ps: &mut ParamSet, ids: &[usize], dy: &Tensor) -> Result<()> {
        if dy.len() != ids.len() * self.dim {
            return shape_err(format!(
                "embedding upstream gradient has {} elements, expected {}",
                dy.len(),
                ids.len() * self.dim
            ));
        }
        let g = ps.get_mut(&self.table)?.grad_mut();
        for (&id, row) in ids.iter().zip(dy.data().chunks_exact(self.dim)) {
            if Some(id) == self.pad_id || id >= self.vocab {
                continue;
            }
            for (dst, src) in g[id * self.dim..(id + 1) * self.dim].iter_mut().zip(row) {
                *dst += src;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pad_rows_are_zero_and_get_no_gradient() {
        let emb = Embedding::new("e", 3, 2, Some(2));
        let mut ps = ParamSet::new();
        ps.insert("e", Tensor::from_vec(&[3, 2], vec![1., 2., 3., 4., 5., 6.]).unwrap());
        let y = emb.forward(&ps, &[1, 2, 1]).unwrap();
        assert_eq!(y.data(), &[3., 4., 0., 0., 3., 4.]);
        let dy = Tensor::from_vec(&[3, 2], vec![1.0; 6]).unwrap();
        emb.backward(&mut ps, &[1, 2, 1], &dy).unwrap();
        assert_eq!(ps.get("e").unwrap().grad().unwrap(), &[0., 0., 2., 2., 0., 0.]);
    }

    #[test]
    fn out_of_range_id_is_a_shape_error() {
        let emb = Embedding::new("e", 2, 2, None);
        let mut ps = ParamSet::new();
        ps.insert("e", Tensor::zeros(&[2, 2]));
        assert!(emb.forward(&ps, &[2]).is_err());
    }
}
