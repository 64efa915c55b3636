//! LSTM and identity-initialized ReLU RNN layers with backpropagation
//! through time. Both start from zero hidden (and cell) state.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_inputs(xs: &[Vec<f64>], dim: usize) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::EmptySequence);
    }
    match xs.iter().find(|x| x.len() != dim) {
        Some(x) => Err(Error::ShapeMismatch(format!(
            "recurrent input of width {}, expected {dim}",
            x.len()
        ))),
        None => Ok(()),
    }
}

/// Gate rows are stacked as input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub w_x: Tensor,
    pub w_h: Tensor,
    pub b: Tensor,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    xs: Vec<Vec<f64>>,
    hs: Vec<Vec<f64>>,
    cs: Vec<Vec<f64>>,
    /// post-activation gates per step, `4H`
    gates: Vec<Vec<f64>>,
}

impl Lstm {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let scale = 1.0 / (hidden as f64).sqrt();
        let mut b = Tensor::zeros(&[4 * hidden]);
        b.data_mut()[hidden..2 * hidden].fill(1.0);
        Self {
            w_x: Tensor::uniform(&[4 * hidden, input], scale, rng),
            w_h: Tensor::uniform(&[4 * hidden, hidden], scale, rng),
            b,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.shape()[1]
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.shape()[1]
    }

    pub fn params(&self) -> Vec<&Tensor> {
        vec![&self.w_x, &self.w_h, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w_x, &mut self.w_h, &mut self.b]
    }

    pub fn forward(&self, xs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, LstmCache)> {
        check_inputs(xs, self.input_dim())?;
        let h = self.hidden();
        let mut hs = vec![vec![0.0; h]];
        let mut cs = vec![vec![0.0; h]];
        let mut gates = Vec::with_capacity(xs.len());
        for x in xs {
            let mut z = self.b.data().to_vec();
            self.w_x.matvec_acc(x, &mut z);
            self.w_h.matvec_acc(hs.last().unwrap(), &mut z);
            for k in 0..h {
                z[k] = sigmoid(z[k]);
                z[h + k] = sigmoid(z[h + k]);
                z[2 * h + k] = z[2 * h + k].tanh();
                z[3 * h + k] = sigmoid(z[3 * h + k]);
            }
            let c_prev = cs.last().unwrap();
            let c: Vec<f64> = (0..h)
                .map(|k| z[h + k] * c_prev[k] + z[k] * z[2 * h + k])
                .collect();
            let hn: Vec<f64> = (0..h).map(|k| z[3 * h + k] * c[k].tanh()).collect();
            gates.push(z);
            cs.push(c);
            hs.push(hn);
        }
        let out = hs[1..].to_vec();
        Ok((
            out,
            LstmCache {
                xs: xs.to_vec(),
                hs,
                cs,
                gates,
            },
        ))
    }

    /// `grads` holds `[w_x, w_h, b]` gradient buffers.
    pub fn backward(&self, cache: &LstmCache, upstream: &[Vec<f64>], grads: &mut [Tensor]) -> Vec<Vec<f64>> {
        let h = self.hidden();
        let n = cache.xs.len();
        let mut dxs = vec![vec![0.0; self.input_dim()]; n];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        for t in (0..n).rev() {
            let g = &cache.gates[t];
            let c = &cache.cs[t + 1];
            let c_prev = &cache.cs[t];
            for k in 0..h {
                let (i, f, cand, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                let tc = c[k].tanh();
                let dh = upstream[t][k] + dh_next[k];
                let d_o = dh * tc;
                let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
                dz[k] = dc * cand * i * (1.0 - i);
                dz[h + k] = dc * c_prev[k] * f * (1.0 - f);
                dz[2 * h + k] = dc * i * (1.0 - cand * cand);
                dz[3 * h + k] = d_o * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            grads[0].outer_acc(&dz, &cache.xs[t]);
            grads[1].outer_acc(&dz, &cache.hs[t]);
            grads[2].add_assign(&dz);
            self.w_x.matvec_t_acc(&dz, &mut dxs[t]);
            dh_next.fill(0.0);
            self.w_h.matvec_t_acc(&dz, &mut dh_next);
        }
        dxs
    }
}

/// `h_n = relu(W_x x_n + W_h h_{n-1} + b)`, `W_h` starting at identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Irnn {
    pub w_x: Tensor,
    pub w_h: Tensor,
    pub b: Tensor,
}

#[derive(Debug, Clone)]
pub struct IrnnCache {
    xs: Vec<Vec<f64>>,
    hs: Vec<Vec<f64>>,
}

impl Irnn {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let scale = 1.0 / (input.max(1) as f64).sqrt();
        Self {
            w_x: Tensor::uniform(&[hidden, input], scale, rng),
            w_h: Tensor::identity(hidden),
            b: Tensor::zeros(&[hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.shape()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.shape()[1]
    }

    pub fn params(&self) -> Vec<&Tensor> {
        vec![&self.w_x, &self.w_h, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w_x, &mut self.w_h, &mut self.b]
    }

    pub fn forward(&self, xs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, IrnnCache)> {
        self.forward_from(xs, &vec![0.0; self.hidden()])
    }

    /// Runs the recurrence from an explicit initial state.
    pub fn forward_from(&self, xs: &[Vec<f64>], h0: &[f64]) -> Result<(Vec<Vec<f64>>, IrnnCache)> {
        check_inputs(xs, self.input_dim())?;
        let mut hs = vec![h0.to_vec()];
        for x in xs {
            let mut z = self.b.data().to_vec();
            self.w_x.matvec_acc(x, &mut z);
            self.w_h.matvec_acc(hs.last().unwrap(), &mut z);
            z.iter_mut().for_each(|v| *v = v.max(0.0));
            hs.push(z);
        }
        Ok((
            hs[1..].to_vec(),
            IrnnCache {
                xs: xs.to_vec(),
                hs,
            },
        ))
    }

    pub fn backward(&self, cache: &IrnnCache, upstream: &[Vec<f64>], grads: &mut [Tensor]) -> Vec<Vec<f64>> {
        let h = self.hidden();
        let n = cache.xs.len();
        let mut dxs = vec![vec![0.0; self.input_dim()]; n];
        let mut dh_next = vec![0.0; h];
        let mut dz = vec![0.0; h];
        for t in (0..n).rev() {
            let ht = &cache.hs[t + 1];
            for k in 0..h {
                let dh = upstream[t][k] + dh_next[k];
                dz[k] = if ht[k] > 0.0 { dh } else { 0.0 };
            }
            grads[0].outer_acc(&dz, &cache.xs[t]);
            grads[1].outer_acc(&dz, &cache.hs[t]);
            grads[2].add_assign(&dz);
            self.w_x.matvec_t_acc(&dz, &mut dxs[t]);
            dh_next.fill(0.0);
            self.w_h.matvec_t_acc(&dz, &mut dh_next);
        }
        dxs
    }
}
