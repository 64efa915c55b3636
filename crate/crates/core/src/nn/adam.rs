use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_lr() -> f64 {
    0.001
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: default_lr(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: Vec<&mut Tensor>, grads: &[Tensor]) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient count");
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for (((x, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *x -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[f64]) -> Tensor {
        Tensor::from_vec(&[v.len()], v.to_vec()).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = t(&[1.0, -2.0]);
        let mut adam = Adam::new(AdamConfig::default());
        for _ in 0..3 {
            adam.step(vec![&mut p], &[t(&[0.0, 0.0])]);
        }
        assert_eq!(p.data(), &[1.0, -2.0]);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient() {
        let mut p = t(&[0.0, 0.0, 0.0]);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(vec![&mut p], &[t(&[3.0, -0.5, 1e-3])]);
        for (x, s) in p.data().iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - s * 0.001).abs() < 1e-7, "{x}");
        }
    }

    #[test]
    fn constant_gradient_step_tends_to_lr() {
        // iterate the recurrence by hand for the reference magnitude
        let (b1, b2, eps, lr, g) = (0.9f64, 0.999f64, 1e-8, 0.001, 0.25);
        let (mut m, mut v) = (0.0, 0.0);
        let mut expected = 0.0;
        for k in 1..=500 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            expected = lr * (m / (1.0 - b1.powi(k))) / ((v / (1.0 - b2.powi(k))).sqrt() + eps);
        }
        let mut p = t(&[0.0]);
        let mut adam = Adam::new(AdamConfig::default());
        let mut last = 0.0;
        for _ in 0..500 {
            let before = p.data()[0];
            adam.step(vec![&mut p], &[t(&[g])]);
            last = before - p.data()[0];
        }
        assert!((last - expected).abs() < 1e-15);
        assert!((last - lr).abs() < 1e-6);
    }
}
