use alloc::vec;
use alloc::vec::Vec;

use super::config::{LayerClass, PeaConfig};
use super::schedule::{decompose, pea_cycles};
use crate::models::DemodVariant;
use crate::ofdm::FrameConfig;
use crate::Result;

/// One row of the per-layer cycle table: input `[I, X]`, output `[O, Y]`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerCycles {
    pub model: &'static str,
    pub layer: &'static str,
    pub in_ch: usize,
    pub in_len: usize,
    pub out_ch: usize,
    pub out_len: usize,
    pub macs: u64,
    pub cycles: u64,
}

/// Per-layer PEA / Conv1D cycles for one DFT pass and one Demod pass
/// (`pea.rows` frames batched on the array rows).
pub fn layer_cycle_table(cfg: &FrameConfig, demod: Option<DemodVariant>, pea: &PeaConfig) -> Result<Vec<LayerCycles>> {
    let s = cfg.sym_len();
    let f = cfg.syms_per_frame;
    pea.validate(f)?;
    let rows = pea.rows;
    let one = decompose((rows, s), (s, s), pea, LayerClass::Dft)?;
    let dft_single = pea_cycles(&[&one], pea, true);
    let mut t = vec![
        LayerCycles {
            model: "DFT-Net",
            layer: "Linear-1/2",
            in_ch: rows,
            in_len: s,
            out_ch: rows,
            out_len: s,
            macs: one.macs(),
            cycles: dft_single,
        },
        LayerCycles {
            model: "DFT-Net",
            layer: "Linear-12",
            in_ch: rows,
            in_len: s,
            out_ch: rows,
            out_len: s,
            macs: 2 * one.macs(),
            cycles: pea_cycles(&[&one, &one], pea, true),
        },
        LayerCycles {
            model: "DFT-Net",
            layer: "Conv1D",
            in_ch: 4,
            in_len: s,
            out_ch: 2,
            out_len: s,
            macs: (8 * s * rows / 2) as u64,
            cycles: s as u64,
        },
    ];
    if let Some(v) = demod {
        let len = f * s;
        let dm = cfg.bits_per_frame();
        let (name, layers): (&'static str, Vec<(&'static str, usize, usize, usize)>) = match v {
            DemodVariant::Joint => ("Demod-Net1", vec![("Linear", 2 * len, 2 * dm, 1)]),
            DemodVariant::Split => (
                "Demod-Net2",
                vec![("Linear-1/2", len, dm, 1), ("Linear-12", len, dm, 2)],
            ),
        };
        for (layer, k, n, reps) in layers {
            let sc = decompose((rows, k), (k, n), pea, LayerClass::Demod)?;
            let refs: Vec<_> = (0..reps).map(|_| &sc).collect();
            t.push(LayerCycles {
                model: name,
                layer,
                in_ch: 1,
                in_len: k * reps,
                out_ch: 1,
                out_len: n * reps,
                macs: reps as u64 * sc.macs(),
                cycles: pea_cycles(&refs, pea, true),
            });
        }
        t.push(LayerCycles {
            model: name,
            layer: "Conv1D",
            in_ch: 4,
            in_len: dm,
            out_ch: 2,
            out_len: dm,
            macs: (8 * dm * rows) as u64,
            cycles: dm as u64,
        });
    }
    Ok(t)
}
