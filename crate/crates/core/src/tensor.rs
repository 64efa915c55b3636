//! Dense row-major `f64` tensors used for every trainable parameter.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// I.i.d. uniform entries in `[-scale, scale]`.
    pub fn uniform<R: Rng + ?Sized>(shape: &[usize], scale: f64, rng: &mut R) -> Self {
        let mut t = Self::zeros(shape);
        if scale > 0.0 {
            for x in &mut t.data {
                *x = rng.random_range(-scale..=scale);
            }
        }
        t
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.shape)
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Element of a 2-D tensor.
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.shape[1] + col]
    }

    #[inline]
    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut f64 {
        let cols = self.shape[1];
        &mut self.data[row * cols + col]
    }

    /// `self (rows x cols) * x (cols)` added into `out (rows)`.
    pub(crate) fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        let cols = self.shape[1];
        debug_assert_eq!(x.len(), cols);
        for (row, o) in self.data.chunks_exact(cols).zip(out.iter_mut()) {
            *o += dot(row, x);
        }
    }

    /// `self^T (cols x rows) * g (rows)` added into `out (cols)`.
    pub(crate) fn matvec_t_acc(&self, g: &[f64], out: &mut [f64]) {
        let cols = self.shape[1];
        for (row, &gi) in self.data.chunks_exact(cols).zip(g) {
            if gi != 0.0 {
                for (o, &w) in out.iter_mut().zip(row) {
                    *o += gi * w;
                }
            }
        }
    }

    /// Rank-one update `self += g x^T`.
    pub(crate) fn outer_acc(&mut self, g: &[f64], x: &[f64]) {
        let cols = self.shape[1];
        for (row, &gi) in self.data.chunks_exact_mut(cols).zip(g) {
            if gi != 0.0 {
                for (w, &xj) in row.iter_mut().zip(x) {
                    *w += gi * xj;
                }
            }
        }
    }

    pub(crate) fn add_assign(&mut self, other: &[f64]) {
        for (a, b) in self.data.iter_mut().zip(other) {
            *a += b;
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
