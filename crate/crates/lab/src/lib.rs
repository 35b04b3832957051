//! Experiment driver for the learned OFDM transceiver: configuration,
//! parameter bundles, BER sweeps, quantization and accelerator runs.
//!
//! Every numeric result comes from `ofdm-nn-core`; this crate adds files,
//! threads and the `ofdm-nn` command line.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod csvio;
mod error;
pub mod report;
pub mod stats;
pub mod sweep;

pub use config::{ExperimentConfig, QuantOptions, SweepConfig};
pub use error::{LabError, LabResult};
pub use sweep::{Arithmetic, BerRecord, Int8Engine, Link};
