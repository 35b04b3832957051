use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Parameters, RealTensor};
use crate::math::sqrt;
use crate::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Eval,
}

/// Batch normalization over the last axis; statistics pool every leading row.
///
/// Both the normalization and the running-variance update use the biased
/// (population) batch variance.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormLayer {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub eps: f64,
    pub momentum: f64,
}

/// State saved by the forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct BnCache {
    mode: BnMode,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnGrads {
    pub dx: RealTensor,
    pub dgamma: Vec<f64>,
    pub dbeta: Vec<f64>,
}

impl BatchNormLayer {
    /// `gamma = 1, beta = 0`, running statistics `(0, 1 - eps)` so that the
    /// eval-mode transform is exactly the identity.
    pub fn identity(channels: usize) -> Self {
        Self {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0 - BN_EPS; channels],
            eps: BN_EPS,
            momentum: BN_MOMENTUM,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Per-channel eval-mode scale `gamma / sqrt(var + eps)`.
    pub fn eval_scale(&self) -> Vec<f64> {
        self.gamma
            .iter()
            .zip(&self.running_var)
            .map(|(g, v)| g / sqrt(v + self.eps))
            .collect()
    }

    /// Batch mean and biased variance per channel.
    pub fn batch_stats(&self, x: &RealTensor) -> Result<(Vec<f64>, Vec<f64>)> {
        let c = self.check(x)?;
        let rows = x.leading();
        let mut mean = vec![0.0; c];
        for r in x.data().chunks_exact(c) {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= rows as f64);
        let mut var = vec![0.0; c];
        for r in x.data().chunks_exact(c) {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s /= rows as f64);
        Ok((mean, var))
    }

    fn check(&self, x: &RealTensor) -> Result<usize> {
        let c = self.channels();
        if x.last_dim() != c {
            return Err(Error::Shape(format!(
                "batchnorm expects {c} channels, got shape {:?}",
                x.shape()
            )));
        }
        Ok(c)
    }

    pub fn forward(&mut self, x: &RealTensor, mode: BnMode) -> Result<(RealTensor, BnCache)> {
        let c = self.check(x)?;
        let (mean, var) = match mode {
            BnMode::Train => {
                if x.leading() < 2 {
                    return Err(Error::DegenerateVariance);
                }
                let (mean, var) = self.batch_stats(x)?;
                let m = self.momentum;
                for i in 0..c {
                    self.running_mean[i] = (1.0 - m) * self.running_mean[i] + m * mean[i];
                    self.running_var[i] = (1.0 - m) * self.running_var[i] + m * var[i];
                }
                (mean, var)
            }
            BnMode::Eval => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / sqrt(v + self.eps)).collect();
        let mut xhat = Vec::with_capacity(x.len());
        let mut y = Vec::with_capacity(x.len());
        for r in x.data().chunks_exact(c) {
            for i in 0..c {
                let h = (r[i] - mean[i]) * inv_std[i];
                xhat.push(h);
                y.push(self.gamma[i] * h + self.beta[i]);
            }
        }
        let cache = BnCache {
            mode,
            xhat,
            inv_std,
            shape: x.shape().to_vec(),
        };
        Ok((RealTensor::new(x.shape(), y)?, cache))
    }

    /// Eval-mode forward without touching the running statistics.
    pub fn infer(&self, x: &RealTensor) -> Result<RealTensor> {
        let c = self.check(x)?;
        let scale = self.eval_scale();
        let mut y = Vec::with_capacity(x.len());
        for r in x.data().chunks_exact(c) {
            for i in 0..c {
                y.push((r[i] - self.running_mean[i]) * scale[i] + self.beta[i]);
            }
        }
        RealTensor::new(x.shape(), y)
    }

    pub fn backward(&self, cache: &BnCache, dy: &RealTensor) -> Result<BnGrads> {
        let c = self.channels();
        if dy.shape() != cache.shape.as_slice() {
            return Err(Error::Shape(format!(
                "batchnorm backward: dy shape {:?} vs cached {:?}",
                dy.shape(),
                cache.shape
            )));
        }
        let mut dgamma = vec![0.0; c];
        let mut dbeta = vec![0.0; c];
        for (g, h) in dy.data().chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
            for i in 0..c {
                dgamma[i] += g[i] * h[i];
                dbeta[i] += g[i];
            }
        }
        let mut dx = Vec::with_capacity(dy.len());
        match cache.mode {
            BnMode::Eval => {
                for g in dy.data().chunks_exact(c) {
                    for i in 0..c {
                        dx.push(g[i] * self.gamma[i] * cache.inv_std[i]);
                    }
                }
            }
            BnMode::Train => {
                let m = dy.leading() as f64;
                for (g, h) in dy.data().chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
                    for i in 0..c {
                        let k = self.gamma[i] * cache.inv_std[i] / m;
                        dx.push(k * (m * g[i] - dbeta[i] - h[i] * dgamma[i]));
                    }
                }
            }
        }
        Ok(BnGrads {
            dx: RealTensor::new(dy.shape(), dx)?,
            dgamma,
            dbeta,
        })
    }
}

impl Parameters for BatchNormLayer {
    fn params(&self) -> Vec<&[f64]> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.gamma, &mut self.beta]
    }
}
