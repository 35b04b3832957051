//! DFT-Net and Demod-Net, the three link variants, end-to-end training and
//! complexity accounting.

mod complexity;
mod demod;
mod dftnet;
pub mod layout;
mod train;
mod variant;

pub use complexity::{count_complexity, demod_complexity, dftnet_complexity, Complexity, LayerCost};
pub use demod::{DEMOD_BN_GAIN, hard_decisions, DemodCache, DemodLinear, DemodNetParams, DemodVariant};
pub use dftnet::{DftNetCache, DftNetParams, Direction};
pub use train::{POWER_FRAMES, train_e2e, TrainConfig, TrainReport, Trainer};
pub use variant::{run_variant, run_variant_batch, SystemVariant, VariantKind};
