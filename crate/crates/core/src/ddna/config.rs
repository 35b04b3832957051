use alloc::format;

use crate::{Error, Result};

/// Processing-element array geometry and timing knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PeaConfig {
    pub rows: usize,
    pub cols: usize,
    pub clock_hz: f64,
    pub dma_bytes_per_cycle: usize,
    /// Longest reduction chunk streamed before partial sums spill to buf4
    /// (Demod layers only).
    pub max_k: usize,
    /// Cycles of a Demod weight-tile reload hidden behind the previous block.
    pub reload_overlap: usize,
    /// Extra cycles for a block that reads partial sums back from buf4.
    pub accumulate_cycles: usize,
    /// Cost of one register-configuration step.
    pub reg_config_cycles: u64,
    /// Cost of one status poll (`array_done`, `conv_done`, ...).
    pub poll_cycles: u64,
}

impl Default for PeaConfig {
    fn default() -> Self {
        Self {
            rows: 16,
            cols: 16,
            clock_hz: 250e6,
            dma_bytes_per_cycle: 16,
            max_k: 160,
            reload_overlap: 144,
            accumulate_cycles: 16,
            reg_config_cycles: 0,
            poll_cycles: 0,
        }
    }
}

impl PeaConfig {
    /// `rows = 2·k·F` with `cols = 16`.
    pub fn with_rows(rows: usize) -> Self {
        Self {
            rows,
            ..Self::default()
        }
    }

    pub fn validate(&self, syms_per_frame: usize) -> Result<()> {
        if self.cols == 0 || self.rows == 0 || self.rows % (2 * syms_per_frame) != 0 {
            return Err(Error::Schedule(format!(
                "PEA rows {} must be a positive multiple of 2F = {}",
                self.rows,
                2 * syms_per_frame
            )));
        }
        if self.dma_bytes_per_cycle == 0 || self.max_k == 0 || !(self.clock_hz > 0.0) {
            return Err(Error::Schedule("PEA timing parameters must be positive".into()));
        }
        Ok(())
    }

    /// Frames per DFT-Net pass (`k` in `2·k·F`).
    pub fn frames_per_dft_pass(&self, syms_per_frame: usize) -> usize {
        self.rows / (2 * syms_per_frame)
    }
}

/// Which reload / accumulation rules a layer follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerClass {
    /// Whole reduction in one stream, weight reload fully overlapped.
    Dft,
    /// Reduction split into `max_k` chunks with buf4 partial sums.
    Demod,
}
