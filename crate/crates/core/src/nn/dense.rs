use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => f64::from(u8::from(y > 0.0)),
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Fully connected layer, `w` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Tensor,
    pub b: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(input: usize, units: usize, activation: Activation, rng: &mut R) -> Self {
        let scale = (6.0 / (input + units) as f64).sqrt();
        Self {
            w: Tensor::uniform(&[units, input], scale, rng),
            b: Tensor::zeros(&[units]),
            activation,
        }
    }

    pub fn units(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn params(&self) -> Vec<&Tensor> {
        vec![&self.w, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w, &mut self.b]
    }

    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, DenseCache) {
        let mut y = self.b.data().to_vec();
        self.w.matvec_acc(x, &mut y);
        y.iter_mut().for_each(|v| *v = self.activation.apply(*v));
        (
            y.clone(),
            DenseCache {
                x: x.to_vec(),
                y,
            },
        )
    }

    pub fn backward(&self, cache: &DenseCache, upstream: &[f64], grads: &mut [Tensor]) -> Vec<f64> {
        let dz: Vec<f64> = upstream
            .iter()
            .zip(&cache.y)
            .map(|(g, &y)| g * self.activation.grad_from_output(y))
            .collect();
        grads[0].outer_acc(&dz, &cache.x);
        grads[1].add_assign(&dz);
        let mut dx = vec![0.0; self.input_dim()];
        self.w.matvec_t_acc(&dz, &mut dx);
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dense_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for act in [Activation::Linear, Activation::Tanh] {
            let layer = Dense::new(3, 2, act, &mut rng);
            let x = vec![0.2, -0.4, 0.9];
            let up = vec![0.7, -1.3];
            let loss = |l: &Dense, x: &[f64]| -> f64 {
                l.forward(x).0.iter().zip(&up).map(|(a, b)| a * b).sum()
            };
            let (_, cache) = layer.forward(&x);
            let mut grads = vec![layer.w.zeros_like(), layer.b.zeros_like()];
            let dx = layer.backward(&cache, &up, &mut grads);
            let h = 1e-5;
            for p in 0..2 {
                for i in 0..grads[p].len() {
                    let mut a = layer.clone();
                    a.params_mut()[p].data_mut()[i] += h;
                    let mut b = layer.clone();
                    b.params_mut()[p].data_mut()[i] -= h;
                    let fd = (loss(&a, &x) - loss(&b, &x)) / (2.0 * h);
                    assert!((fd - grads[p].data()[i]).abs() < 1e-8);
                }
            }
            for i in 0..3 {
                let mut a = x.clone();
                a[i] += h;
                let mut b = x.clone();
                b[i] -= h;
                let fd = (loss(&layer, &a) - loss(&layer, &b)) / (2.0 * h);
                assert!((fd - dx[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn relu_clamps() {
        let layer = Dense {
            w: Tensor::from_vec(&[2, 1], vec![1.0, -1.0]).unwrap(),
            b: Tensor::zeros(&[2]),
            activation: Activation::Relu,
        };
        assert_eq!(layer.forward(&[2.0]).0, vec![2.0, 0.0]);
    }
}
