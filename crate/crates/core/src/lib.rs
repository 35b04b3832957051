//! Desk-scale laboratory for a learned OFDM transceiver.
//!
//! The crate is `no_std` (with `alloc`) and holds every algorithmic piece:
//!
//! * [`ofdm`]: the conventional chain (Gray QAM, framing, DFT/FFT, fixed-point
//!   FFT, cyclic prefix, AWGN, exact soft demodulation, BER counting).
//! * [`nn`]: a small dense-tensor layer library with analytic backward passes
//!   and Adam.
//! * [`models`]: DFT-Net and Demod-Net, the three system variants, end-to-end
//!   training and complexity accounting.
//! * [`deploy`]: batch-norm fusion, calibration, symmetric INT8 quantization,
//!   requantization factors and the integer-only forward path.
//! * [`ddna`]: a cycle-level, functionally bit-exact model of the streaming
//!   accelerator (output-stationary PE array, Conv1D unit, buffers, controller).
//!
//! IO, configuration files and the command line live in the `ofdm-nn-lab`
//! companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod ddna;
pub mod deploy;
mod error;
pub(crate) mod math;
pub mod models;
pub mod nn;
pub mod ofdm;
pub mod params;
pub mod rng;

pub use error::{Error, Result};
