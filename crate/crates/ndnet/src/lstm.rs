//! Single-layer LSTM with exact backpropagation through time.
//!
//! Gate layout inside the stacked `[4H, ·]` weights is input, forget,
//! candidate, output:
//!
//! ```text
//! z = Wx x + Wh h_prev + b
//! i = σ(z_i)  f = σ(z_f)  g = tanh(z_g)  o = σ(z_o)
//! c = f ⊙ c_prev + i ⊙ g
//! h = o ⊙ tanh(c)
//! ```

use rand::Rng;

use crate::activation::sigmoid_scalar;
use crate::error::{shape_err, Result};
use crate::init::uniform_fan_in;
use crate::{ParamSet, Tensor};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lstm {
    wx: String,
    wh: String,
    bias: String,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

/// Per-step activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct LstmStepCache {
    x: Vec<f32>,
    h_prev: Vec<f32>,
    c_prev: Vec<f32>,
    i: Vec<f32>,
    f: Vec<f32>,
    g: Vec<f32>,
    o: Vec<f32>,
    tanh_c: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Vec<f32>,
    pub c: Vec<f32>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Gradients flowing out of one backward step.
#[derive(Clone, Debug)]
pub struct LstmStepGrad {
    pub dx: Vec<f32>,
    pub dh_prev: Vec<f32>,
    pub dc_prev: Vec<f32>,
}

impl Lstm {
    pub fn new(prefix: &str, input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            wx: format!("{prefix}.wx"),
            wh: format!("{prefix}.wh"),
            bias: format!("{prefix}.bias"),
            input_dim,
            hidden_dim,
        }
    }

    pub fn param_names(&self) -> [&str; 3] {
        [&self.wx, &self.wh, &self.bias]
    }

    pub fn init<R: Rng + ?Sized>(&self, ps: &mut ParamSet, rng: &mut R) {
        let (d, h) = (self.input_dim, self.hidden_dim);
        ps.insert(self.wx.clone(), uniform_fan_in(&[4 * h, d], d + h, rng));
        ps.insert(self.wh.clone(), uniform_fan_in(&[4 * h, h], d + h, rng));
        ps.insert(self.bias.clone(), uniform_fan_in(&[4 * h], d + h, rng));
    }

    fn check(&self, ps: &ParamSet) -> Result<()> {
        let (d, h) = (self.input_dim, self.hidden_dim);
        ps.get(&self.wx)?.expect_shape(&[4 * h, d], "lstm wx")?;
        ps.get(&self.wh)?.expect_shape(&[4 * h, h], "lstm wh")?;
        ps.get(&self.bias)?.expect_shape(&[4 * h], "lstm bias")?;
        Ok(())
    }

    /// One step. `x` has `input_dim` entries.
    pub fn step(
        &self,
        ps: &ParamSet,
        x: &[f32],
        state: &LstmState,
    ) -> Result<(LstmState, LstmStepCache)> {
        let (d, h) = (self.input_dim, self.hidden_dim);
        if x.len() != d || state.h.len() != h || state.c.len() != h {
            return shape_err(format!(
                "lstm step: x {} (want {d}), h {} / c {} (want {h})",
                x.len(),
                state.h.len(),
                state.c.len()
            ));
        }
        self.check(ps)?;
        let wx = ps.get(&self.wx)?.data();
        let wh = ps.get(&self.wh)?.data();
        let b = ps.get(&self.bias)?.data();

        let mut z = b.to_vec();
        for (r, zr) in z.iter_mut().enumerate() {
            let wxr = &wx[r * d..(r + 1) * d];
            let whr = &wh[r * h..(r + 1) * h];
            let mut acc = 0.0f32;
            for k in 0..d {
                acc += wxr[k] * x[k];
            }
            for k in 0..h {
                acc += whr[k] * state.h[k];
            }
            *zr += acc;
        }
        let i: Vec<f32> = z[..h].iter().map(|&v| sigmoid_scalar(v)).collect();
        let f: Vec<f32> = z[h..2 * h].iter().map(|&v| sigmoid_scalar(v)).collect();
        let g: Vec<f32> = z[2 * h..3 * h].iter().map(|v| v.tanh()).collect();
        let o: Vec<f32> = z[3 * h..].iter().map(|&v| sigmoid_scalar(v)).collect();
        let c: Vec<f32> = (0..h).map(|k| f[k] * state.c[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f32> = c.iter().map(|v| v.tanh()).collect();
        let hn: Vec<f32> = (0..h).map(|k| o[k] * tanh_c[k]).collect();
        Ok((
            LstmState { h: hn, c },
            LstmStepCache {
                x: x.to_vec(),
                h_prev: state.h.clone(),
                c_prev: state.c.clone(),
                i,
                f,
                g,
                o,
                tanh_c,
            },
        ))
    }

    /// Backward through one step given the gradient arriving at its `h` and `c`.
    pub fn step_backward(
        &self,
        ps: &mut ParamSet,
        cache: &LstmStepCache,
        dh: &[f32],
        dc: &[f32],
    ) -> Result<LstmStepGrad> {
        let (d, h) = (self.input_dim, self.hidden_dim);
        if dh.len() != h || dc.len() != h {
            return shape_err("lstm step_backward: gradient length != hidden_dim");
        }
        let mut dz = vec![0.0f32; 4 * h];
        let mut dc_prev = vec![0.0f32; h];
        for k in 0..h {
            let do_ = dh[k] * cache.tanh_c[k];
            let dct = dc[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
            let di = dct * cache.g[k];
            let df = dct * cache.c_prev[k];
            let dg = dct * cache.i[k];
            dc_prev[k] = dct * cache.f[k];
            dz[k] = di * cache.i[k] * (1.0 - cache.i[k]);
            dz[h + k] = df * cache.f[k] * (1.0 - cache.f[k]);
            dz[2 * h + k] = dg * (1.0 - cache.g[k] * cache.g[k]);
            dz[3 * h + k] = do_ * cache.o[k] * (1.0 - cache.o[k]);
        }

        let mut dx = vec![0.0f32; d];
        let mut dh_prev = vec![0.0f32; h];
        {
            let (wx, gwx) = ps.get_mut(&self.wx)?.data_and_grad_mut();
            for (r, &dzr) in dz.iter().enumerate() {
                if dzr == 0.0 {
                    continue;
                }
                let row = &wx[r * d..(r + 1) * d];
                let grow = &mut gwx[r * d..(r + 1) * d];
                for k in 0..d {
                    grow[k] += dzr * cache.x[k];
                    dx[k] += dzr * row[k];
                }
            }
        }
        {
            let (wh, gwh) = ps.get_mut(&self.wh)?.data_and_grad_mut();
            for (r, &dzr) in dz.iter().enumerate() {
                if dzr == 0.0 {
                    continue;
                }
                let row = &wh[r * h..(r + 1) * h];
                let grow = &mut gwh[r * h..(r + 1) * h];
                for k in 0..h {
                    grow[k] += dzr * cache.h_prev[k];
                    dh_prev[k] += dzr * row[k];
                }
            }
        }
        for (g, v) in ps.get_mut(&self.bias)?.grad_mut().iter_mut().zip(&dz) {
            *g += v;
        }
        Ok(LstmStepGrad { dx, dh_prev, dc_prev })
    }

    /// Runs a whole sequence from `init`. Returns the hidden output of every
    /// step, the final state and the per-step caches.
    pub fn sequence(
        &self,
        ps: &ParamSet,
        xs: &Tensor,
        init: &LstmState,
    ) -> Result<(Tensor, LstmState, Vec<LstmStepCache>)> {
        xs.expect_rank(2, "lstm sequence input")?;
        if xs.shape()[1] != self.input_dim {
            return shape_err(format!(
                "lstm sequence expects [t, {}], got {:?}",
                self.input_dim,
                xs.shape()
            ));
        }
        let t = xs.shape()[0];
        let mut state = init.clone();
        let mut hs = Vec::with_capacity(t * self.hidden_dim);
        let mut caches = Vec::with_capacity(t);
        for x in xs.data().chunks_exact(self.input_dim) {
            let (next, cache) = self.step(ps, x, &state)?;
            hs.extend_from_slice(&next.h);
            caches.push(cache);
            state = next;
        }
        Ok((Tensor::from_vec(&[t, self.hidden_dim], hs)?, state, caches))
    }

    /// Backpropagation through time. `dhs` is `[t, hidden]`, the gradient on
    /// every step's output; `dh_last`/`dc_last` is any extra gradient on the
    /// final state. Returns `(dxs, d_init_state)`.
    pub fn sequence_backward(
        &self,
        ps: &mut ParamSet,
        caches: &[LstmStepCache],
        dhs: &Tensor,
        final_grad: Option<&LstmState>,
    ) -> Result<(Tensor, LstmState)> {
        let (d, h) = (self.input_dim, self.hidden_dim);
        let t = caches.len();
        if dhs.len() != t * h {
            return shape_err(format!(
                "lstm sequence_backward: dhs has {} elements, expected {}",
                dhs.len(),
                t * h
            ));
        }
        let mut carry = final_grad.cloned().unwrap_or_else(|| LstmState::zeros(h));
        let mut dxs = vec![0.0f32; t * d];
        for step in (0..t).rev() {
            let dh: Vec<f32> = dhs.data()[step * h..(step + 1) * h]
                .iter()
                .zip(&carry.h)
                .map(|(a, b)| a + b)
                .collect();
            let g = self.step_backward(ps, &caches[step], &dh, &carry.c)?;
            dxs[step * d..(step + 1) * d].copy_from_slice(&g.dx);
            carry = LstmState {
                h: g.dh_prev,
                c: g.dc_prev,
            };
        }
        Ok((Tensor::from_vec(&[t, d], dxs)?, carry))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn zero_weights_and_state_give_zero_output() {
        let lstm = Lstm::new("l", 4, 3);
        let mut ps = ParamSet::new();
        ps.insert("l.wx", Tensor::zeros(&[12, 4]));
        ps.insert("l.wh", Tensor::zeros(&[12, 3]));
        ps.insert("l.bias", Tensor::zeros(&[12]));
        let (s, _) = lstm.step(&ps, &[1.0, -2.0, 0.5, 3.0], &LstmState::zeros(3)).unwrap();
        assert!(s.h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_equals_length_one_sequence() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let lstm = Lstm::new("l", 5, 4);
        let mut ps = ParamSet::new();
        lstm.init(&mut ps, &mut rng);
        let x = crate::init::uniform(&[1, 5], 1.0, &mut rng);
        let init = LstmState {
            h: vec![0.1, -0.2, 0.3, 0.0],
            c: vec![0.5, 0.5, -0.5, 0.2],
        };
        let (s1, _) = lstm.step(&ps, x.data(), &init).unwrap();
        let (hs, s2, _) = lstm.sequence(&ps, &x, &init).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(hs.data(), &s1.h[..]);
    }

    #[test]
    fn rejects_wrong_input_width() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let lstm = Lstm::new("l", 5, 4);
        let mut ps = ParamSet::new();
        lstm.init(&mut ps, &mut rng);
        assert!(lstm.step(&ps, &[0.0; 4], &LstmState::zeros(4)).is_err());
    }
}
