use alloc::string::String;
use alloc::vec::Vec;

use super::DemodVariant;
use crate::ofdm::FrameConfig;

/// Dimensions and cost of one layer for one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerCost {
    pub model: String,
    pub layer: String,
    /// Input channels × length, output channels × length.
    pub in_ch: usize,
    pub in_len: usize,
    pub out_ch: usize,
    pub out_len: usize,
    /// Multiplicative weights only.
    pub weights: usize,
    /// Weights, biases and batch-norm scale/shift.
    pub params_unfused: usize,
    /// Weights and biases after folding batch norm.
    pub params_fused: usize,
    pub macs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Complexity {
    pub layers: Vec<LayerCost>,
    pub weights: usize,
    pub params_unfused: usize,
    pub params_fused: usize,
    pub macs: usize,
}

impl Complexity {
    fn push(&mut self, l: LayerCost) {
        self.weights += l.weights;
        self.params_unfused += l.params_unfused;
        self.params_fused += l.params_fused;
        self.macs += l.macs;
        self.layers.push(l);
    }

    pub fn extend(&mut self, other: Complexity) {
        for l in other.layers {
            self.push(l);
        }
    }
}

/// Linear layer applied to `rows` input rows of length `x`, producing `y`.
fn linear(model: &str, layer: &str, rows: usize, x: usize, y: usize) -> LayerCost {
    LayerCost {
        model: model.into(),
        layer: layer.into(),
        in_ch: rows,
        in_len: x,
        out_ch: rows,
        out_len: y,
        weights: x * y,
        params_unfused: x * y + 3 * y,
        params_fused: x * y + y,
        macs: rows * x * y,
    }
}

/// 4→2 channel mix over `len` positions, repeated `lanes` times per frame.
fn mix(model: &str, len: usize, lanes: usize) -> LayerCost {
    LayerCost {
        model: model.into(),
        layer: "conv".into(),
        in_ch: 4,
        in_len: len,
        out_ch: 2,
        out_len: len,
        weights: 8,
        params_unfused: 10,
        params_fused: 10,
        macs: 8 * len * lanes,
    }
}

/// One DFT-Net acting on a whole frame.
pub fn dftnet_complexity(cfg: &FrameConfig, model: &str) -> Complexity {
    let (rows, s) = (2 * cfg.syms_per_frame, cfg.sym_len());
    let mut c = Complexity::default();
    c.push(linear(model, "lin_r", rows, s, s));
    c.push(linear(model, "lin_i", rows, s, s));
    c.push(mix(model, s, cfg.syms_per_frame));
    c
}

pub fn demod_complexity(cfg: &FrameConfig, variant: DemodVariant) -> Complexity {
    let len = cfg.syms_per_frame * cfg.sym_len();
    let dm = cfg.bits_per_frame();
    let mut c = Complexity::default();
    match variant {
        DemodVariant::Joint => c.push(linear("demod1", "linear", 1, 2 * len, 2 * dm)),
        DemodVariant::Split => {
            c.push(linear("demod2", "lin_r", 1, len, dm));
            c.push(linear("demod2", "lin_i", 1, len, dm));
        }
    }
    let model = if variant == DemodVariant::Joint { "demod1" } else { "demod2" };
    c.push(mix(model, dm, 1));
    c
}

/// Receiver stack (DFT-Net followed by Demod-Net), per frame.
pub fn count_complexity(cfg: &FrameConfig, variant: DemodVariant) -> Complexity {
    let mut c = dftnet_complexity(cfg, "dft");
    c.extend(demod_complexity(cfg, variant));
    c
}
