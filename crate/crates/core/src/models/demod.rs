use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::dftnet::{export_bn, import_bn};
use crate::math::sqrt;
use crate::nn::{
    leaky_relu, leaky_relu_backward, sigmoid, AffineLayer, BatchNormLayer, BnCache, BnMode,
    MixConvLayer, Parameters, RealTensor, LEAKY_SLOPE,
};
use crate::params::{ArrayStore, NamedArray};
use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DemodVariant {
    /// One wide linear over both channels.
    Joint = 1,
    /// Separate linears for the real and imaginary channels.
    Split = 2,
}

impl DemodVariant {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Self::Joint),
            2 => Ok(Self::Split),
            _ => Err(Error::Config(format!("demod variant must be 1 or 2, got {i}"))),
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DemodLinear {
    Joint {
        lin: AffineLayer,
        bn: BatchNormLayer,
    },
    Split {
        lin_r: AffineLayer,
        bn_r: BatchNormLayer,
        lin_i: AffineLayer,
        bn_i: BatchNormLayer,
    },
}

/// Frame-level soft demodulator producing two scores per bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DemodNetParams {
    pub linear: DemodLinear,
    pub mix: MixConvLayer,
    pub slope: f64,
    /// Input length per channel (`F·S`).
    pub in_len: usize,
    /// Bits per frame.
    pub dm: usize,
}

#[derive(Debug, Clone)]
pub struct DemodCache {
    x: RealTensor,
    bn: Vec<BnCache>,
    h: RealTensor,
    u: RealTensor,
    batch: usize,
}

/// Initial BN gain of the Demod-Net linear stage. Unit-variance features
/// through the mix give scores with spread near one and an initial loss
/// around 0.85; halving the gain keeps the untrained net close to chance.
pub const DEMOD_BN_GAIN: f64 = 0.5;

fn damped_bn(channels: usize) -> BatchNormLayer {
    let mut bn = BatchNormLayer::identity(channels);
    bn.gamma.fill(DEMOD_BN_GAIN);
    bn
}

fn uniform_affine(in_dim: usize, out_dim: usize, rng: &mut SimRng) -> AffineLayer {
    let a = sqrt(1.0 / in_dim as f64);
    let mut l = AffineLayer::zeros(in_dim, out_dim);
    l.weight.iter_mut().for_each(|w| *w = rng.uniform(-a, a));
    l.bias.iter_mut().for_each(|b| *b = rng.uniform(-a, a));
    l
}

impl DemodNetParams {
    /// Fresh network: uniform affines, BN gain [`DEMOD_BN_GAIN`] and the
    /// forward mix pattern.
    pub fn new(variant: DemodVariant, in_len: usize, dm: usize, seed: u64) -> Self {
        let mut rng = SimRng::stream(seed, 0xde30d);
        let linear = match variant {
            DemodVariant::Joint => DemodLinear::Joint {
                lin: uniform_affine(2 * in_len, 2 * dm, &mut rng),
                bn: damped_bn(2 * dm),
            },
            DemodVariant::Split => DemodLinear::Split {
                lin_r: uniform_affine(in_len, dm, &mut rng),
                bn_r: damped_bn(dm),
                lin_i: uniform_affine(in_len, dm, &mut rng),
                bn_i: damped_bn(dm),
            },
        };
        Self {
            linear,
            mix: MixConvLayer::forward_dft(),
            slope: LEAKY_SLOPE,
            in_len,
            dm,
        }
    }

    pub fn variant(&self) -> DemodVariant {
        match self.linear {
            DemodLinear::Joint { .. } => DemodVariant::Joint,
            DemodLinear::Split { .. } => DemodVariant::Split,
        }
    }

    fn check(&self, x: &RealTensor) -> Result<usize> {
        let sh = x.shape();
        if sh.len() != 3 || sh[1] != 2 || sh[2] != self.in_len {
            return Err(Error::Shape(format!(
                "demod-net expects [B, 2, {}], got {sh:?}",
                self.in_len
            )));
        }
        Ok(sh[0])
    }

    /// Pre-activation features `h` of shape `[B, 2, Dm]`.
    fn linear_stage(&mut self, x: &RealTensor, mode: BnMode) -> Result<(RealTensor, Vec<BnCache>)> {
        let b = self.check(x)?;
        let (dm, len) = (self.dm, self.in_len);
        let mut caches = Vec::new();
        let mut run_bn = |bn: &mut BatchNormLayer, h: &RealTensor| -> Result<RealTensor> {
            let (y, c) = bn.forward(h, mode)?;
            caches.push(c);
            Ok(y)
        };
        let h = match &mut self.linear {
            DemodLinear::Joint { lin, bn } => {
                let flat = x.clone().reshape(&[b, 2 * len])?;
                run_bn(bn, &lin.forward(&flat)?)?.reshape(&[b, 2, dm])?
            }
            DemodLinear::Split { lin_r, bn_r, lin_i, bn_i } => {
                let (re, im) = split_channels(x, b, len)?;
                let hr = run_bn(bn_r, &lin_r.forward(&re)?)?;
                let hi = run_bn(bn_i, &lin_i.forward(&im)?)?;
                join_channels(&hr, &hi, b, dm)?
            }
        };
        Ok((h, caches))
    }

    fn head(&self, h: &RealTensor, b: usize) -> Result<(RealTensor, RealTensor)> {
        let mut u = Vec::with_capacity(b * 4 * self.dm);
        for blk in h.data().chunks_exact(2 * self.dm) {
            u.extend_from_slice(blk);
            u.extend(leaky_relu(blk, self.slope));
        }
        let u = RealTensor::new(&[b, 4, self.dm], u)?;
        let z = self.mix.forward(&u)?;
        Ok((u, transpose_last(&z, b, 2, self.dm)?))
    }

    /// Eval-mode logits `[B, Dm, 2]`.
    pub fn logits(&self, x: &RealTensor) -> Result<RealTensor> {
        let b = self.check(x)?;
        let h = self.linear_eval(x, b)?;
        Ok(self.head(&h, b)?.1)
    }

    fn linear_eval(&self, x: &RealTensor, b: usize) -> Result<RealTensor> {
        let (dm, len) = (self.dm, self.in_len);
        match &self.linear {
            DemodLinear::Joint { lin, bn } => {
                let flat = x.clone().reshape(&[b, 2 * len])?;
                bn.infer(&lin.forward(&flat)?)?.reshape(&[b, 2, dm])
            }
            DemodLinear::Split { lin_r, bn_r, lin_i, bn_i } => {
                let (re, im) = split_channels(x, b, len)?;
                let hr = bn_r.infer(&lin_r.forward(&re)?)?;
                let hi = bn_i.infer(&lin_i.forward(&im)?)?;
                join_channels(&hr, &hi, b, dm)
            }
        }
    }

    /// Eval-mode scores in `(0, 1)`, shape `[B, Dm, 2]`.
    pub fn forward(&self, x: &RealTensor) -> Result<RealTensor> {
        let z = self.logits(x)?;
        RealTensor::new(z.shape(), sigmoid(z.data()))
    }

    /// Logits plus the cache needed by [`Self::backward`].
    pub fn forward_cached(&mut self, x: &RealTensor, mode: BnMode) -> Result<(RealTensor, DemodCache)> {
        let b = self.check(x)?;
        let (h, bn) = self.linear_stage(x, mode)?;
        let (u, z) = self.head(&h, b)?;
        Ok((
            z,
            DemodCache {
                x: x.clone(),
                bn,
                h,
                u,
                batch: b,
            },
        ))
    }

    /// Gradient of the logits `[B, Dm, 2]` back to the input, plus parameter
    /// gradients in [`Parameters::params`] order.
    pub fn backward(&self, cache: &DemodCache, dz: &RealTensor) -> Result<(RealTensor, Vec<Vec<f64>>)> {
        let (b, dm, len) = (cache.batch, self.dm, self.in_len);
        let dz = transpose_last(dz, b, dm, 2)?;
        let g_mix = self.mix.backward(&cache.u, &dz)?;
        let mut dh = Vec::with_capacity(b * 2 * dm);
        for (du, h) in g_mix.dx.data().chunks_exact(4 * dm).zip(cache.h.data().chunks_exact(2 * dm)) {
            let lin = &du[..2 * dm];
            let act = leaky_relu_backward(h, &du[2 * dm..], self.slope);
            dh.extend(lin.iter().zip(&act).map(|(a, c)| a + c));
        }
        let dh = RealTensor::new(&[b, 2, dm], dh)?;
        let mut grads = Vec::new();
        let dx = match &self.linear {
            DemodLinear::Joint { lin, bn } => {
                let dh = dh.reshape(&[b, 2 * dm])?;
                let g_bn = bn.backward(&cache.bn[0], &dh)?;
                let flat = cache.x.clone().reshape(&[b, 2 * len])?;
                let g = lin.backward(&flat, &g_bn.dx)?;
                grads.extend([g.dw, g.db, g_bn.dgamma, g_bn.dbeta]);
                g.dx.reshape(&[b, 2, len])?
            }
            DemodLinear::Split { lin_r, bn_r, lin_i, bn_i } => {
                let (dhr, dhi) = split_channels(&dh, b, dm)?;
                let (re, im) = split_channels(&cache.x, b, len)?;
                let gbr = bn_r.backward(&cache.bn[0], &dhr)?;
                let gbi = bn_i.backward(&cache.bn[1], &dhi)?;
                let gr = lin_r.backward(&re, &gbr.dx)?;
                let gi = lin_i.backward(&im, &gbi.dx)?;
                let dx = join_channels(&gr.dx, &gi.dx, b, len)?;
                grads.extend([gr.dw, gr.db, gbr.dgamma, gbr.dbeta, gi.dw, gi.db, gbi.dgamma, gbi.dbeta]);
                dx
            }
        };
        grads.push(g_mix.dw);
        grads.push(g_mix.db);
        Ok((dx, grads))
    }

    pub fn export(&self, prefix: &str, out: &mut Vec<NamedArray>) {
        let (dm, len) = (self.dm, self.in_len);
        match &self.linear {
            DemodLinear::Joint { lin, bn } => {
                out.push(NamedArray::f64(format!("{prefix}.lin.weight"), &[2 * dm, 2 * len], &lin.weight));
                out.push(NamedArray::f64(format!("{prefix}.lin.bias"), &[2 * dm], &lin.bias));
                export_bn(&format!("{prefix}.lin.bn"), bn, out);
            }
            DemodLinear::Split { lin_r, bn_r, lin_i, bn_i } => {
                for (tag, lin, bn) in [("lin_r", lin_r, bn_r), ("lin_i", lin_i, bn_i)] {
                    out.push(NamedArray::f64(format!("{prefix}.{tag}.weight"), &[dm, len], &lin.weight));
                    out.push(NamedArray::f64(format!("{prefix}.{tag}.bias"), &[dm], &lin.bias));
                    export_bn(&format!("{prefix}.{tag}.bn"), bn, out);
                }
            }
        }
        out.push(NamedArray::f64(format!("{prefix}.mix.weight"), &[2, 4], &self.mix.weight));
        out.push(NamedArray::f64(format!("{prefix}.mix.bias"), &[2], &self.mix.bias));
    }

    pub fn import(prefix: &str, store: &ArrayStore, variant: DemodVariant, in_len: usize, dm: usize) -> Result<Self> {
        let lin = |tag: &str, i: usize, o: usize| -> Result<AffineLayer> {
            AffineLayer::new(
                i,
                o,
                store.f64(&format!("{prefix}.{tag}.weight"), i * o)?,
                store.f64(&format!("{prefix}.{tag}.bias"), o)?,
            )
        };
        let linear = match variant {
            DemodVariant::Joint => DemodLinear::Joint {
                lin: lin("lin", 2 * in_len, 2 * dm)?,
                bn: import_bn(&format!("{prefix}.lin.bn"), store, 2 * dm)?,
            },
            DemodVariant::Split => DemodLinear::Split {
                lin_r: lin("lin_r", in_len, dm)?,
                bn_r: import_bn(&format!("{prefix}.lin_r.bn"), store, dm)?,
                lin_i: lin("lin_i", in_len, dm)?,
                bn_i: import_bn(&format!("{prefix}.lin_i.bn"), store, dm)?,
            },
        };
        Ok(Self {
            linear,
            mix: MixConvLayer::new(
                4,
                2,
                store.f64(&format!("{prefix}.mix.weight"), 8)?,
                store.f64(&format!("{prefix}.mix.bias"), 2)?,
            )?,
            slope: LEAKY_SLOPE,
            in_len,
            dm,
        })
    }
}

impl Parameters for DemodNetParams {
    fn params(&self) -> Vec<&[f64]> {
        let mut v = match &self.linear {
            DemodLinear::Joint { lin, bn } => {
                let mut v = lin.params();
                v.extend(bn.params());
                v
            }
            DemodLinear::Split { lin_r, bn_r, lin_i, bn_i } => {
                let mut v = lin_r.params();
                v.extend(bn_r.params());
                v.extend(lin_i.params());
                v.extend(bn_i.params());
                v
            }
        };
        v.extend(self.mix.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = match &mut self.linear {
            DemodLinear::Joint { lin, bn } => {
                let mut v = lin.params_mut();
                v.extend(bn.params_mut());
                v
            }
            DemodLinear::Split { lin_r, bn_r, lin_i, bn_i } => {
                let mut v = lin_r.params_mut();
                v.extend(bn_r.params_mut());
                v.extend(lin_i.params_mut());
                v.extend(bn_i.params_mut());
                v
            }
        };
        v.extend(self.mix.params_mut());
        v
    }
}

/// `[B, 2, L]` into two `[B, L]` tensors.
fn split_channels(x: &RealTensor, b: usize, len: usize) -> Result<(RealTensor, RealTensor)> {
    let mut re = Vec::with_capacity(b * len);
    let mut im = Vec::with_capacity(b * len);
    for blk in x.data().chunks_exact(2 * len) {
        re.extend_from_slice(&blk[..len]);
        im.extend_from_slice(&blk[len..]);
    }
    Ok((RealTensor::new(&[b, len], re)?, RealTensor::new(&[b, len], im)?))
}

fn join_channels(re: &RealTensor, im: &RealTensor, b: usize, len: usize) -> Result<RealTensor> {
    let mut out = Vec::with_capacity(2 * b * len);
    for (r, i) in re.data().chunks_exact(len).zip(im.data().chunks_exact(len)) {
        out.extend_from_slice(r);
        out.extend_from_slice(i);
    }
    RealTensor::new(&[b, 2, len], out)
}

/// `[B, R, C]` to `[B, C, R]`.
pub(crate) fn transpose_last(x: &RealTensor, b: usize, r: usize, c: usize) -> Result<RealTensor> {
    let mut out = vec![0.0; b * r * c];
    for n in 0..b {
        let src = &x.data()[n * r * c..(n + 1) * r * c];
        let dst = &mut out[n * r * c..(n + 1) * r * c];
        for i in 0..r {
            for j in 0..c {
                dst[j * r + i] = src[i * c + j];
            }
        }
    }
    RealTensor::new(&[b, c, r], out)
}

/// Hard decisions from `[.., Dm, 2]` scores: bit is 1 only when score 1
/// strictly exceeds score 0.
pub fn hard_decisions(scores: &[f64]) -> Vec<u8> {
    scores
        .chunks_exact(2)
        .map(|p| u8::from(p[1] > p[0]))
        .collect()
}
