use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{cos, sin, twiddle_angle};
use crate::nn::{
    AffineLayer, BatchNormLayer, BnCache, BnMode, MixConvLayer, Parameters, RealTensor, BN_EPS,
};
use crate::ofdm::FrameConfig;
use crate::params::{ArrayStore, NamedArray};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    /// Time samples to frequency bins (receiver side).
    Forward,
    /// Frequency bins to time samples (transmitter side).
    Inverse,
}

/// Two square linear maps plus a 2×4 channel mix acting on one symbol at a
/// time. Input rows alternate `(re, im)` per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct DftNetParams {
    pub lin_r: AffineLayer,
    pub bn_r: BatchNormLayer,
    pub lin_i: AffineLayer,
    pub bn_i: BatchNormLayer,
    pub mix: MixConvLayer,
    pub direction: Direction,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct DftNetCache {
    x: RealTensor,
    bn_r: BnCache,
    bn_i: BnCache,
    u: RealTensor,
}

impl DftNetParams {
    /// Weights that make the network compute the exact (inverse) DFT of the
    /// N-point symbol embedded in an S-sample row.
    ///
    /// Forward: input is CP followed by N samples; bins land in outputs
    /// `0..N`, the tail `N..S` is zero. Inverse: bins occupy inputs `0..N`
    /// (tail ignored); outputs are CP followed by the N-sample symbol, scaled
    /// by `1/N`.
    pub fn analytic(cfg: &FrameConfig, direction: Direction) -> Self {
        let (n, cp) = (cfg.n_fft, cfg.cp_len);
        let s = n + cp;
        let mut lin_r = AffineLayer::zeros(s, s);
        let mut lin_i = AffineLayer::zeros(s, s);
        match direction {
            Direction::Forward => {
                for k in 0..n {
                    for t in 0..n {
                        let a = twiddle_angle(k, t, n);
                        lin_r.weight[k * s + cp + t] = cos(a);
                        lin_i.weight[k * s + cp + t] = sin(a);
                    }
                }
            }
            Direction::Inverse => {
                let inv = 1.0 / n as f64;
                for out in 0..s {
                    let t = (out + n - cp % n) % n;
                    for k in 0..n {
                        let a = twiddle_angle(k, t, n);
                        lin_r.weight[out * s + k] = cos(a) * inv;
                        lin_i.weight[out * s + k] = sin(a) * inv;
                    }
                }
            }
        }
        let mix = match direction {
            Direction::Forward => MixConvLayer::forward_dft(),
            Direction::Inverse => MixConvLayer::inverse_dft(),
        };
        Self {
            lin_r,
            bn_r: BatchNormLayer::identity(s),
            lin_i,
            bn_i: BatchNormLayer::identity(s),
            mix,
            direction,
        }
    }

    pub fn sym_len(&self) -> usize {
        self.lin_r.in_dim
    }

    fn check(&self, x: &RealTensor) -> Result<usize> {
        let s = self.sym_len();
        let sh = x.shape();
        if sh.len() != 2 || sh[1] != s || sh[0] % 2 != 0 {
            return Err(Error::Shape(format!(
                "dft-net expects [2*symbols, {s}], got {sh:?}"
            )));
        }
        Ok(sh[0] / 2)
    }

    /// Eval-mode forward on `[2·symbols, S]`; running statistics are used.
    pub fn forward(&self, x: &RealTensor) -> Result<RealTensor> {
        let syms = self.check(x)?;
        let a_r = self.bn_r.infer(&self.lin_r.forward(x)?)?;
        let a_i = self.bn_i.infer(&self.lin_i.forward(x)?)?;
        let u = stack_branches(&a_r, &a_i, syms, self.sym_len())?;
        let y = self.mix.forward(&u)?;
        y.reshape(&[2 * syms, self.sym_len()])
    }

    /// Forward that records activations; `Train` uses batch statistics.
    pub fn forward_cached(&mut self, x: &RealTensor, mode: BnMode) -> Result<(RealTensor, DftNetCache)> {
        let syms = self.check(x)?;
        let (a_r, bn_r) = self.bn_r.forward(&self.lin_r.forward(x)?, mode)?;
        let (a_i, bn_i) = self.bn_i.forward(&self.lin_i.forward(x)?, mode)?;
        let u = stack_branches(&a_r, &a_i, syms, self.sym_len())?;
        let y = self.mix.forward(&u)?.reshape(&[2 * syms, self.sym_len()])?;
        Ok((
            y,
            DftNetCache {
                x: x.clone(),
                bn_r,
                bn_i,
                u,
            },
        ))
    }

    /// Returns the input gradient and parameter gradients in
    /// [`Parameters::params`] order.
    pub fn backward(&self, cache: &DftNetCache, dy: &RealTensor) -> Result<(RealTensor, Vec<Vec<f64>>)> {
        let s = self.sym_len();
        let syms = cache.x.shape()[0] / 2;
        let dy = dy.clone().reshape(&[syms, 2, s])?;
        let g_mix = self.mix.backward(&cache.u, &dy)?;
        let (da_r, da_i) = split_branches(&g_mix.dx, syms, s)?;
        let g_bn_r = self.bn_r.backward(&cache.bn_r, &da_r)?;
        let g_bn_i = self.bn_i.backward(&cache.bn_i, &da_i)?;
        let g_r = self.lin_r.backward(&cache.x, &g_bn_r.dx)?;
        let g_i = self.lin_i.backward(&cache.x, &g_bn_i.dx)?;
        let mut dx = g_r.dx;
        for (d, e) in dx.data_mut().iter_mut().zip(g_i.dx.data()) {
            *d += e;
        }
        let grads = vec![
            g_r.dw, g_r.db, g_bn_r.dgamma, g_bn_r.dbeta, g_i.dw, g_i.db, g_bn_i.dgamma,
            g_bn_i.dbeta, g_mix.dw, g_mix.db,
        ];
        Ok((dx, grads))
    }

    /// Sets every BN so that, on `x`, train-mode normalization followed by the
    /// affine reproduces the un-normalized layer output: running statistics
    /// become the batch statistics, `gamma = sqrt(var + eps)`, `beta = mean`.
    pub fn calibrate_identity_bn(&mut self, x: &RealTensor) -> Result<()> {
        self.check(x)?;
        for (lin, bn) in [(&self.lin_r, &mut self.bn_r), (&self.lin_i, &mut self.bn_i)] {
            let h = lin.forward(x)?;
            let (mean, var) = bn.batch_stats(&h)?;
            for c in 0..bn.channels() {
                bn.gamma[c] = crate::math::sqrt(var[c] + bn.eps);
                bn.beta[c] = mean[c];
            }
            bn.running_mean = mean;
            bn.running_var = var;
        }
        Ok(())
    }

    pub fn export(&self, prefix: &str, out: &mut Vec<NamedArray>) {
        let s = self.sym_len();
        for (tag, lin, bn) in [("lin_r", &self.lin_r, &self.bn_r), ("lin_i", &self.lin_i, &self.bn_i)] {
            out.push(NamedArray::f64(format!("{prefix}.{tag}.weight"), &[s, s], &lin.weight));
            out.push(NamedArray::f64(format!("{prefix}.{tag}.bias"), &[s], &lin.bias));
            export_bn(&format!("{prefix}.{tag}.bn"), bn, out);
        }
        out.push(NamedArray::f64(format!("{prefix}.mix.weight"), &[2, 4], &self.mix.weight));
        out.push(NamedArray::f64(format!("{prefix}.mix.bias"), &[2], &self.mix.bias));
    }

    pub fn import(prefix: &str, store: &ArrayStore, sym_len: usize, direction: Direction) -> Result<Self> {
        let s = sym_len;
        let lin = |tag: &str| -> Result<AffineLayer> {
            AffineLayer::new(
                s,
                s,
                store.f64(&format!("{prefix}.{tag}.weight"), s * s)?,
                store.f64(&format!("{prefix}.{tag}.bias"), s)?,
            )
        };
        Ok(Self {
            lin_r: lin("lin_r")?,
            bn_r: import_bn(&format!("{prefix}.lin_r.bn"), store, s)?,
            lin_i: lin("lin_i")?,
            bn_i: import_bn(&format!("{prefix}.lin_i.bn"), store, s)?,
            mix: MixConvLayer::new(
                4,
                2,
                store.f64(&format!("{prefix}.mix.weight"), 8)?,
                store.f64(&format!("{prefix}.mix.bias"), 2)?,
            )?,
            direction,
        })
    }
}

impl Parameters for DftNetParams {
    fn params(&self) -> Vec<&[f64]> {
        let mut v = self.lin_r.params();
        v.extend(self.bn_r.params());
        v.extend(self.lin_i.params());
        v.extend(self.bn_i.params());
        v.extend(self.mix.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.lin_r.params_mut();
        v.extend(self.bn_r.params_mut());
        v.extend(self.lin_i.params_mut());
        v.extend(self.bn_i.params_mut());
        v.extend(self.mix.params_mut());
        v
    }
}

pub(crate) fn export_bn(prefix: &str, bn: &BatchNormLayer, out: &mut Vec<NamedArray>) {
    let c = bn.channels();
    out.push(NamedArray::f64(format!("{prefix}.gamma"), &[c], &bn.gamma));
    out.push(NamedArray::f64(format!("{prefix}.beta"), &[c], &bn.beta));
    out.push(NamedArray::f64(format!("{prefix}.running_mean"), &[c], &bn.running_mean));
    out.push(NamedArray::f64(format!("{prefix}.running_var"), &[c], &bn.running_var));
}

pub(crate) fn import_bn(prefix: &str, store: &ArrayStore, c: usize) -> Result<BatchNormLayer> {
    let mut bn = BatchNormLayer::identity(c);
    bn.gamma = store.f64(&format!("{prefix}.gamma"), c)?;
    bn.beta = store.f64(&format!("{prefix}.beta"), c)?;
    bn.running_mean = store.f64(&format!("{prefix}.running_mean"), c)?;
    bn.running_var = store.f64(&format!("{prefix}.running_var"), c)?;
    if bn.running_var.iter().any(|&v| v < 0.0 || v + BN_EPS <= 0.0) {
        return Err(Error::Bundle(format!("{prefix}: negative running variance")));
    }
    Ok(bn)
}

/// `[u1, u2, u3, u4] = [W_r·re, W_r·im, W_i·re, W_i·im]` per symbol.
fn stack_branches(a_r: &RealTensor, a_i: &RealTensor, syms: usize, s: usize) -> Result<RealTensor> {
    let mut u = Vec::with_capacity(syms * 4 * s);
    for k in 0..syms {
        u.extend_from_slice(&a_r.data()[2 * k * s..(2 * k + 2) * s]);
        u.extend_from_slice(&a_i.data()[2 * k * s..(2 * k + 2) * s]);
    }
    RealTensor::new(&[syms, 4, s], u)
}

fn split_branches(du: &RealTensor, syms: usize, s: usize) -> Result<(RealTensor, RealTensor)> {
    let mut r = Vec::with_capacity(syms * 2 * s);
    let mut i = Vec::with_capacity(syms * 2 * s);
    for blk in du.data().chunks_exact(4 * s) {
        r.extend_from_slice(&blk[..2 * s]);
        i.extend_from_slice(&blk[2 * s..]);
    }
    Ok((
        RealTensor::new(&[2 * syms, s], r)?,
        RealTensor::new(&[2 * syms, s], i)?,
    ))
}
