//! Inference graph construction: batch-norm folding, INT8 calibration and
//! quantization, per-layer requantization and the integer-only forward path.

mod calib_set;
mod fuse;
mod graph;
mod quant;

pub use calib_set::{calibration_rows, CALIB_FRAMES};
pub use fuse::{
    fuse_bn, fuse_bn_mix, FusedActivations, FusedAffine, FusedDemod, FusedDemodLinear,
    FusedDftNet, FusedReceiver,
};
pub use graph::{
    build_quantized_graph, fake_quant_forward, frame_channels_i8, int_demod_head, int_dot_requant,
    int_mix_block, leaky_shift, ActScales, IntOutput, QDemod, QDemodLinear, QDftNet, QLinear,
    QuantizedGraph,
};
pub use quant::{
    calibrate, dequantize, derive_requant, quantize_tensor, CalibMode, QuantParams,
    RequantFactor, HIST_BINS, MIN_SCALE, PERCENTILE, QMAX, REQUANT_MAX_SHIFT, REQUANT_M_LIMIT,
};
