use alloc::format;
use alloc::vec::Vec;

use crate::models::{DemodLinear, DemodNetParams, DftNetParams, SystemVariant};
use crate::nn::{leaky_relu, AffineLayer, BatchNormLayer, MixConvLayer, RealTensor};
use crate::models::layout::rows_to_frame_channels;
use crate::{Error, Result};

/// Affine layer with batch norm folded in: `W' = diag(s)·W`,
/// `B' = s ⊙ (B − μ) + β`, `s = γ / sqrt(σ² + ε)`.
pub type FusedAffine = AffineLayer;

pub fn fuse_bn(layer: &AffineLayer, bn: &BatchNormLayer) -> Result<FusedAffine> {
    if bn.channels() != layer.out_dim {
        return Err(Error::Shape(format!(
            "batchnorm has {} channels, layer has {} outputs",
            bn.channels(),
            layer.out_dim
        )));
    }
    let s = bn.eval_scale();
    let mut out = layer.clone();
    for (o, &so) in s.iter().enumerate() {
        out.weight[o * layer.in_dim..(o + 1) * layer.in_dim]
            .iter_mut()
            .for_each(|w| *w *= so);
        out.bias[o] = so * (layer.bias[o] - bn.running_mean[o]) + bn.beta[o];
    }
    Ok(out)
}

/// Channel-mix counterpart of [`fuse_bn`]; `bn` normalizes output channels.
pub fn fuse_bn_mix(layer: &MixConvLayer, bn: &BatchNormLayer) -> Result<MixConvLayer> {
    let as_affine = AffineLayer::new(layer.cin, layer.cout, layer.weight.clone(), layer.bias.clone())?;
    let f = fuse_bn(&as_affine, bn)?;
    MixConvLayer::new(layer.cin, layer.cout, f.weight, f.bias)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedDftNet {
    pub lin_r: FusedAffine,
    pub lin_i: FusedAffine,
    pub mix: MixConvLayer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FusedDemodLinear {
    Joint(FusedAffine),
    Split(FusedAffine, FusedAffine),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedDemod {
    pub linear: FusedDemodLinear,
    pub mix: MixConvLayer,
    pub slope: f64,
    pub in_len: usize,
    pub dm: usize,
}

/// Inference-only receiver: RX DFT-Net plus optional Demod-Net, BN folded.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedReceiver {
    pub dft: FusedDftNet,
    pub demod: Option<FusedDemod>,
}

/// Every intermediate tensor of a fused forward pass, for calibration.
#[derive(Debug, Clone)]
pub struct FusedActivations {
    /// `[frames·2F, S]`.
    pub input: RealTensor,
    /// Both linear branches, `[frames·2F, S]` each.
    pub a_r: RealTensor,
    pub a_i: RealTensor,
    /// DFT-Net output `[frames·2F, S]`.
    pub dft_out: RealTensor,
    /// Demod-Net pre-activation `[frames, 2, Dm]`.
    pub hidden: Option<RealTensor>,
    /// Demod-Net logits `[frames, 2, Dm]` (channel-major, before transpose).
    pub logits: Option<RealTensor>,
}

impl FusedDftNet {
    pub fn from_params(p: &DftNetParams) -> Result<Self> {
        Ok(Self {
            lin_r: fuse_bn(&p.lin_r, &p.bn_r)?,
            lin_i: fuse_bn(&p.lin_i, &p.bn_i)?,
            mix: p.mix.clone(),
        })
    }

    pub fn sym_len(&self) -> usize {
        self.lin_r.in_dim
    }
}

impl FusedDemod {
    pub fn from_params(p: &DemodNetParams) -> Result<Self> {
        let linear = match &p.linear {
            DemodLinear::Joint { lin, bn } => FusedDemodLinear::Joint(fuse_bn(lin, bn)?),
            DemodLinear::Split { lin_r, bn_r, lin_i, bn_i } => {
                FusedDemodLinear::Split(fuse_bn(lin_r, bn_r)?, fuse_bn(lin_i, bn_i)?)
            }
        };
        Ok(Self {
            linear,
            mix: p.mix.clone(),
            slope: p.slope,
            in_len: p.in_len,
            dm: p.dm,
        })
    }
}

impl FusedReceiver {
    pub fn from_variant(v: &SystemVariant) -> Result<Self> {
        Ok(Self {
            dft: FusedDftNet::from_params(v.rx_net()?)?,
            demod: match &v.demod_net {
                Some(d) => Some(FusedDemod::from_params(d)?),
                None => None,
            },
        })
    }

    /// Forward on rows `[frames·2F, S]`, keeping every intermediate.
    pub fn forward(&self, rows: &RealTensor, frames: usize) -> Result<FusedActivations> {
        let s = self.dft.sym_len();
        let syms = rows.leading() / 2;
        let a_r = self.dft.lin_r.forward(rows)?;
        let a_i = self.dft.lin_i.forward(rows)?;
        let mut u = Vec::with_capacity(4 * syms * s);
        for k in 0..syms {
            u.extend_from_slice(&a_r.data()[2 * k * s..(2 * k + 2) * s]);
            u.extend_from_slice(&a_i.data()[2 * k * s..(2 * k + 2) * s]);
        }
        let dft_out = self
            .dft
            .mix
            .forward(&RealTensor::new(&[syms, 4, s], u)?)?
            .reshape(&[2 * syms, s])?;
        let (hidden, logits) = match &self.demod {
            None => (None, None),
            Some(d) => {
                let x = rows_to_frame_channels(&dft_out, frames)?;
                let (b, len, dm) = (frames, d.in_len, d.dm);
                let h = match &d.linear {
                    FusedDemodLinear::Joint(l) => l
                        .forward(&x.clone().reshape(&[b, 2 * len])?)?
                        .reshape(&[b, 2, dm])?,
                    FusedDemodLinear::Split(lr, li) => {
                        let mut re = Vec::with_capacity(b * len);
                        let mut im = Vec::with_capacity(b * len);
                        for blk in x.data().chunks_exact(2 * len) {
                            re.extend_from_slice(&blk[..len]);
                            im.extend_from_slice(&blk[len..]);
                        }
                        let hr = lr.forward(&RealTensor::new(&[b, len], re)?)?;
                        let hi = li.forward(&RealTensor::new(&[b, len], im)?)?;
                        let mut h = Vec::with_capacity(2 * b * dm);
                        for (r, i) in hr.data().chunks_exact(dm).zip(hi.data().chunks_exact(dm)) {
                            h.extend_from_slice(r);
                            h.extend_from_slice(i);
                        }
                        RealTensor::new(&[b, 2, dm], h)?
                    }
                };
                let mut u = Vec::with_capacity(4 * b * dm);
                for blk in h.data().chunks_exact(2 * dm) {
                    u.extend_from_slice(blk);
                    u.extend(leaky_relu(blk, d.slope));
                }
                let z = d.mix.forward(&RealTensor::new(&[b, 4, dm], u)?)?;
                (Some(h), Some(z))
            }
        };
        Ok(FusedActivations {
            input: rows.clone(),
            a_r,
            a_i,
            dft_out,
            hidden,
            logits,
        })
    }
}
