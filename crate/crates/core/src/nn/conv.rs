//! Valid (unpadded) 1-D convolution and max pooling along time.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn output_len(len: usize, window: usize, stride: usize) -> Result<usize> {
    if len < window {
        return Err(Error::SequenceTooShort {
            length: len,
            required: window,
        });
    }
    Ok((len - window) / stride + 1)
}

/// Filters are stored `filters x (kernel * channels)`, tap-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub w: Tensor,
    pub b: Tensor,
    pub kernel: usize,
    pub stride: usize,
}

#[derive(Debug, Clone)]
pub struct Conv1dCache {
    xs: Vec<Vec<f64>>,
}

impl Conv1d {
    pub fn new<R: Rng + ?Sized>(
        channels: usize,
        filters: usize,
        kernel: usize,
        stride: usize,
        rng: &mut R,
    ) -> Self {
        let scale = 1.0 / ((channels * kernel) as f64).sqrt();
        Self {
            w: Tensor::uniform(&[filters, kernel * channels], scale, rng),
            b: Tensor::zeros(&[filters]),
            kernel,
            stride,
        }
    }

    pub fn channels(&self) -> usize {
        self.w.shape()[1] / self.kernel
    }

    pub fn filters(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn params(&self) -> Vec<&Tensor> {
        vec![&self.w, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w, &mut self.b]
    }

    fn window(&self, xs: &[Vec<f64>], n: usize) -> Vec<f64> {
        xs[n * self.stride..n * self.stride + self.kernel].concat()
    }

    pub fn forward(&self, xs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Conv1dCache)> {
        let c = self.channels();
        if let Some(x) = xs.iter().find(|x| x.len() != c) {
            return Err(Error::ShapeMismatch(format!(
                "conv input of width {}, expected {c}",
                x.len()
            )));
        }
        let len = output_len(xs.len(), self.kernel, self.stride)?;
        let out = (0..len)
            .map(|n| {
                let mut y = self.b.data().to_vec();
                self.w.matvec_acc(&self.window(xs, n), &mut y);
                y
            })
            .collect();
        Ok((out, Conv1dCache { xs: xs.to_vec() }))
    }

    pub fn backward(&self, cache: &Conv1dCache, upstream: &[Vec<f64>], grads: &mut [Tensor]) -> Vec<Vec<f64>> {
        let c = self.channels();
        let mut dxs = vec![vec![0.0; c]; cache.xs.len()];
        let mut dwin = vec![0.0; self.kernel * c];
        for (n, g) in upstream.iter().enumerate() {
            grads[0].outer_acc(g, &self.window(&cache.xs, n));
            grads[1].add_assign(g);
            dwin.fill(0.0);
            self.w.matvec_t_acc(g, &mut dwin);
            for (j, tap) in dwin.chunks_exact(c).enumerate() {
                for (d, v) in dxs[n * self.stride + j].iter_mut().zip(tap) {
                    *d += v;
                }
            }
        }
        dxs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool1d {
    pub size: usize,
    pub stride: usize,
}

/// Winning input step for every output step and channel.
#[derive(Debug, Clone)]
pub struct PoolCache {
    input_len: usize,
    argmax: Vec<Vec<usize>>,
}

impl MaxPool1d {
    pub fn forward(&self, xs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, PoolCache)> {
        let len = output_len(xs.len(), self.size, self.stride)?;
        let channels = xs[0].len();
        let mut out = Vec::with_capacity(len);
        let mut argmax = Vec::with_capacity(len);
        for n in 0..len {
            let start = n * self.stride;
            let mut best = xs[start].clone();
            let mut arg = vec![start; channels];
            for (t, x) in xs.iter().enumerate().skip(start + 1).take(self.size - 1) {
                for ch in 0..channels {
                    if x[ch] > best[ch] {
                        best[ch] = x[ch];
                        arg[ch] = t;
                    }
                }
            }
            out.push(best);
            argmax.push(arg);
        }
        Ok((
            out,
            PoolCache {
                input_len: xs.len(),
                argmax,
            },
        ))
    }

    pub fn backward(&self, cache: &PoolCache, upstream: &[Vec<f64>]) -> Vec<Vec<f64>> {
        route_max_grad(cache, upstream)
    }
}

/// Per-channel maximum over all steps.
pub fn global_max_pool(xs: &[Vec<f64>]) -> Result<(Vec<f64>, PoolCache)> {
    let (mut out, cache) = MaxPool1d {
        size: xs.len().max(1),
        stride: 1,
    }
    .forward(xs)
    .map_err(|_| Error::EmptySequence)?;
    Ok((out.remove(0), cache))
}

pub(crate) fn route_max_grad(cache: &PoolCache, upstream: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let channels = upstream.first().map_or(0, Vec::len);
    let mut dxs = vec![vec![0.0; channels]; cache.input_len];
    for (g, arg) in upstream.iter().zip(&cache.argmax) {
        for ch in 0..channels {
            dxs[arg[ch]][ch] += g[ch];
        }
    }
    dxs
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ones_filter_on_constant_input() {
        let conv = Conv1d {
            w: Tensor::from_vec(&[1, 3], vec![1.0; 3]).unwrap(),
            b: Tensor::zeros(&[1]),
            kernel: 3,
            stride: 1,
        };
        let (out, _) = conv.forward(&vec![vec![2.0]; 6]).unwrap();
        assert_eq!(out, vec![vec![6.0]; 4]);
        assert!(matches!(
            conv.forward(&vec![vec![2.0]; 2]),
            Err(Error::SequenceTooShort {
                length: 2,
                required: 3
            })
        ));
    }

    #[test]
    fn conv_output_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let conv = Conv1d::new(2, 4, 3, 2, &mut rng);
        let (out, _) = conv.forward(&vec![vec![0.1, 0.2]; 10]).unwrap();
        assert_eq!(out.len(), (10 - 3) / 2 + 1);
        assert_eq!(out[0].len(), 4);
    }

    #[test]
    fn maxpool_example() {
        let pool = MaxPool1d { size: 2, stride: 2 };
        let xs: Vec<Vec<f64>> = [1.0, 3.0, 2.0, 5.0].iter().map(|&x| vec![x]).collect();
        let (out, cache) = pool.forward(&xs).unwrap();
        assert_eq!(out, vec![vec![3.0], vec![5.0]]);
        let d = pool.backward(&cache, &[vec![1.0], vec![2.0]]);
        assert_eq!(d, vec![vec![0.0], vec![1.0], vec![0.0], vec![2.0]]);
        assert!(pool.forward(&xs[..1]).is_err());
    }

    #[test]
    fn global_max() {
        let xs = vec![vec![1.0, 9.0], vec![4.0, -1.0], vec![2.0, 0.0]];
        let (out, cache) = global_max_pool(&xs).unwrap();
        assert_eq!(out, vec![4.0, 9.0]);
        let d = route_max_grad(&cache, &[vec![1.0, 1.0]]);
        assert_eq!(d, vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(global_max_pool(&[]), Err(Error::EmptySequence)));
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let conv = Conv1d::new(1, 2, 3, 1, &mut rng);
        let xs: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
        let w: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let loss = |c: &Conv1d, xs: &[Vec<f64>]| -> f64 {
            c.forward(xs)
                .unwrap()
                .0
                .iter()
                .zip(&w)
                .map(|(o, g)| o.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
                .sum()
        };
        let (_, cache) = conv.forward(&xs).unwrap();
        let mut grads = vec![conv.w.zeros_like(), conv.b.zeros_like()];
        let dxs = conv.backward(&cache, &w, &mut grads);
        let h = 1e-5;
        for p in 0..2 {
            for i in 0..grads[p].len() {
                let mut a = conv.clone();
                a.params_mut()[p].data_mut()[i] += h;
                let mut b = conv.clone();
                b.params_mut()[p].data_mut()[i] -= h;
                let fd = (loss(&a, &xs) - loss(&b, &xs)) / (2.0 * h);
                assert!((fd - grads[p].data()[i]).abs() < 1e-8);
            }
        }
        for t in 0..6 {
            let mut a = xs.clone();
            a[t][0] += h;
            let mut b = xs.clone();
            b[t][0] -= h;
            let fd = (loss(&conv, &a) - loss(&conv, &b)) / (2.0 * h);
            assert!((fd - dxs[t][0]).abs() < 1e-8);
        }
    }
}
