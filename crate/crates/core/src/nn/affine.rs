use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::gemm::{matmul, matmul_a_bt, matmul_at_b};
use super::{Parameters, RealTensor};
use crate::{Error, Result};

/// Fully connected layer `y = W x + b`, applied to every row of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim × in_dim`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradients of an [`AffineLayer`]; parameter order matches the layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineGrads {
    pub dx: RealTensor,
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

impl AffineLayer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    pub fn new(in_dim: usize, out_dim: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weight.len() != in_dim * out_dim || bias.len() != out_dim {
            return Err(Error::Shape(format!(
                "affine {out_dim}x{in_dim}: weight has {}, bias has {}",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weight,
            bias,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut l = Self::zeros(dim, dim);
        for i in 0..dim {
            l.weight[i * dim + i] = 1.0;
        }
        l
    }

    fn check_input(&self, x: &RealTensor) -> Result<usize> {
        if x.last_dim() != self.in_dim {
            return Err(Error::Shape(format!(
                "affine expects last dim {}, got shape {:?}",
                self.in_dim,
                x.shape()
            )));
        }
        Ok(x.leading())
    }

    fn out_shape(&self, x: &RealTensor) -> Vec<usize> {
        let mut s = x.shape().to_vec();
        if let Some(last) = s.last_mut() {
            *last = self.out_dim;
        }
        s
    }

    pub fn forward(&self, x: &RealTensor) -> Result<RealTensor> {
        let rows = self.check_input(x)?;
        let mut y = Vec::with_capacity(rows * self.out_dim);
        for _ in 0..rows {
            y.extend_from_slice(&self.bias);
        }
        matmul_a_bt(x.data(), &self.weight, &mut y, rows, self.in_dim, self.out_dim, true);
        RealTensor::new(&self.out_shape(x), y)
    }

    pub fn backward(&self, x: &RealTensor, dy: &RealTensor) -> Result<AffineGrads> {
        let rows = self.check_input(x)?;
        if dy.shape() != self.out_shape(x).as_slice() {
            return Err(Error::Shape(format!(
                "affine backward: dy shape {:?} does not match output",
                dy.shape()
            )));
        }
        let mut dx = vec![0.0; rows * self.in_dim];
        matmul(dy.data(), &self.weight, &mut dx, rows, self.out_dim, self.in_dim, false);
        let mut dw = vec![0.0; self.out_dim * self.in_dim];
        matmul_at_b(dy.data(), x.data(), &mut dw, self.out_dim, rows, self.in_dim, false);
        let mut db = vec![0.0; self.out_dim];
        for r in dy.data().chunks_exact(self.out_dim) {
            for (d, g) in db.iter_mut().zip(r) {
                *d += g;
            }
        }
        Ok(AffineGrads {
            dx: RealTensor::new(x.shape(), dx)?,
            dw,
            db,
        })
    }
}

impl Parameters for AffineLayer {
    fn params(&self) -> Vec<&[f64]> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weight, &mut self.bias]
    }
}
