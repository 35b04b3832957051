//! Experiment configuration: one TOML document, fully defaulted.

use std::path::Path;

use ofdm_nn_core::ddna::{BufferModel, PeaConfig};
use ofdm_nn_core::models::{DemodVariant, TrainConfig, VariantKind};
use ofdm_nn_core::ofdm::FrameConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, LabError, LabResult};

/// Quantization options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantOptions {
    /// Frames pushed through the fused model to collect activation ranges.
    pub calib_frames: usize,
    pub calib_snr_db: [f64; 2],
    /// Frames used for the int-vs-reference equivalence check.
    pub check_frames: usize,
}

impl Default for QuantOptions {
    fn default() -> Self {
        Self {
            calib_frames: ofdm_nn_core::deploy::CALIB_FRAMES,
            calib_snr_db: [-10.0, 30.0],
            check_frames: 64,
        }
    }
}

/// Monte-Carlo BER sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    /// Every point simulates at least this many bits.
    pub min_bits: u64,
    /// A point stops once it has seen this many errors (and `min_bits`).
    pub max_errors: u64,
    /// Hard cap on bits per point.
    pub max_bits: u64,
    /// Frames per detection batch.
    pub batch_frames: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            snr_db: (0..=10).map(f64::from).collect(),
            min_bits: 100_000,
            max_errors: 100,
            max_bits: 10_000_000,
            batch_frames: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub frame: FrameConfig,
    pub variant: VariantKind,
    pub demod_variant: u8,
    pub train: TrainConfig,
    pub quant: QuantOptions,
    pub pea: PeaConfig,
    pub buffers: BufferModel,
    pub sweep: SweepConfig,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            frame: FrameConfig::default(),
            variant: VariantKind::DlReceiver,
            demod_variant: 2,
            train: TrainConfig::default(),
            quant: QuantOptions::default(),
            pea: PeaConfig::default(),
            buffers: BufferModel::default(),
            sweep: SweepConfig::default(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> LabResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> LabResult<String> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn demod(&self) -> LabResult<DemodVariant> {
        Ok(DemodVariant::from_index(self.demod_variant)?)
    }

    /// Overrides the top-level seed and the training seed together.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self
    }

    pub fn validate(&self) -> LabResult<()> {
        self.frame.validate()?;
        self.demod()?;
        self.train.validate()?;
        self.pea.validate(self.frame.syms_per_frame)?;
        let s = &self.sweep;
        if s.snr_db.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LabError::Config("sweep SNR grid must be strictly increasing".into()));
        }
        if s.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Config("sweep SNR values must be finite".into()));
        }
        if s.min_bits < 100_000 {
            return Err(LabError::Config(format!("sweep.min_bits = {} is below 100000", s.min_bits)));
        }
        if s.max_bits < s.min_bits || s.max_errors == 0 || s.batch_frames == 0 {
            return Err(LabError::Config("sweep caps are inconsistent".into()));
        }
        if self.quant.calib_frames == 0 || self.quant.check_frames == 0 {
            return Err(LabError::Config("quantization frame counts must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
