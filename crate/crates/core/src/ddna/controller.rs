use alloc::string::String;
use alloc::vec::Vec;

use crate::deploy::{QuantizedGraph, RequantFactor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMode {
    /// DFT-Net only.
    DftOnly,
    /// DFT-Net followed by Demod-Net.
    DftDemod,
}

/// Controller register file: per-layer requantization pairs (data
/// registers) plus flow and status bits (control registers).
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerRegs {
    pub data: Vec<(String, RequantFactor)>,
    pub mode: FlowMode,
    pub merge_linears: bool,
    pub start: bool,
    pub array_done: bool,
    pub conv_done: bool,
    pub recv_done: bool,
}

impl ControllerRegs {
    pub fn from_graph(g: &QuantizedGraph, merge_linears: bool) -> Self {
        Self {
            data: g.registers(),
            mode: if g.demod.is_some() {
                FlowMode::DftDemod
            } else {
                FlowMode::DftOnly
            },
            merge_linears,
            start: false,
            array_done: false,
            conv_done: false,
            recv_done: false,
        }
    }

    pub fn requant(&self, layer: &str) -> Result<RequantFactor> {
        self.data
            .iter()
            .find(|(n, _)| n == layer)
            .map(|(_, r)| *r)
            .ok_or_else(|| Error::Schedule(alloc::format!("no register entry for layer `{layer}`")))
    }

    /// Every scheduled layer must have a register entry.
    pub fn covers(&self, g: &QuantizedGraph) -> bool {
        g.layers().iter().all(|l| self.requant(&l.name).is_ok())
    }
}
