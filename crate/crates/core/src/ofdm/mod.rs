//! Conventional OFDM baseband chain.

mod ber;
mod chain;
mod channel;
mod fixed_fft;
mod frame;
mod qam;
mod transform;

use alloc::vec::Vec;

pub use ber::{ber, BerCount};
pub use chain::{conventional_rx, conventional_rx_grid, conventional_tx, FftEngine};
pub use channel::{awgn, awgn_with, noise_variance, signal_power};
pub use fixed_fft::{fft_fixed_point, FixedFftOutput};
pub use frame::{add_cp, build_freq_frame, extract_data, remove_cp, FrameConfig};
pub use qam::{constellation, gray_qam_map, qam_soft_demod};
pub use transform::{dft, fft_radix2, idft, ifft_radix2};

use crate::{Error, Result};

/// A single complex value.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct C64 {
    pub re: f64,
    pub im: f64,
}

impl C64 {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// Complex sequence stored as separate real and imaginary planes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComplexVec {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexVec {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::LengthMismatch {
                expected: re.len(),
                got: im.len(),
            });
        }
        Ok(Self { re, im })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            re: alloc::vec![0.0; len],
            im: alloc::vec![0.0; len],
        }
    }

    pub fn with_capacity(len: usize) -> Self {
        Self {
            re: Vec::with_capacity(len),
            im: Vec::with_capacity(len),
        }
    }

    pub fn from_points(points: &[C64]) -> Self {
        Self {
            re: points.iter().map(|p| p.re).collect(),
            im: points.iter().map(|p| p.im).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn get(&self, i: usize) -> C64 {
        C64::new(self.re[i], self.im[i])
    }

    pub fn set(&mut self, i: usize, v: C64) {
        self.re[i] = v.re;
        self.im[i] = v.im;
    }

    pub fn push(&mut self, v: C64) {
        self.re.push(v.re);
        self.im.push(v.im);
    }

    pub fn extend_from(&mut self, other: &ComplexVec) {
        self.re.extend_from_slice(&other.re);
        self.im.extend_from_slice(&other.im);
    }

    pub fn slice(&self, start: usize, end: usize) -> ComplexVec {
        ComplexVec {
            re: self.re[start..end].to_vec(),
            im: self.im[start..end].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(self.im.iter()).all(|v| v.is_finite())
    }

    /// Largest component-wise absolute difference.
    pub fn max_abs_diff(&self, other: &ComplexVec) -> f64 {
        self.re
            .iter()
            .zip(&other.re)
            .chain(self.im.iter().zip(&other.im))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn energy(&self) -> f64 {
        self.re.iter().zip(&self.im).map(|(r, i)| r * r + i * i).sum()
    }
}

/// Hard bits with optional per-bit posterior pairs `(p0, p1)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BitBlock {
    pub bits: Vec<u8>,
    pub soft: Option<Vec<f64>>,
}

impl BitBlock {
    pub fn hard(bits: Vec<u8>) -> Self {
        Self { bits, soft: None }
    }

    pub fn with_soft(bits: Vec<u8>, soft: Vec<f64>) -> Result<Self> {
        if soft.len() != 2 * bits.len() {
            return Err(Error::LengthMismatch {
                expected: 2 * bits.len(),
                got: soft.len(),
            });
        }
        Ok(Self {
            bits,
            soft: Some(soft),
        })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}
