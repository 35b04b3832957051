//! Gray-labelled BPSK / QPSK / 16-QAM with unit average energy.
//!
//! Bit groups are split between the axes: the first half of each group picks
//! the in-phase level, the second half the quadrature level. Per axis the
//! labels follow the reflected Gray code, so neighbouring points differ in a
//! single bit:
//!
//! | m | bits → point                                                   |
//! |---|----------------------------------------------------------------|
//! | 1 | `0 → +1`, `1 → −1`                                             |
//! | 2 | `(b0, b1) → ((1−2b0) + j(1−2b1)) / √2`                         |
//! | 4 | per axis `(s, t) → (1−2s)(1+2t) / √10`, i.e. `00→+1 01→+3 10→−1 11→−3` |

use alloc::format;
use alloc::vec::Vec;

use super::{BitBlock, ComplexVec, C64};
use crate::math;
use crate::{Error, Result};

fn check_order(m: usize) -> Result<()> {
    if matches!(m, 1 | 2 | 4) {
        Ok(())
    } else {
        Err(Error::Shape(format!("modulation order m = {m} not in {{1,2,4}}")))
    }
}

fn axis_level(sign: u8, mag: u8) -> f64 {
    (1.0 - 2.0 * sign as f64) * (1.0 + 2.0 * mag as f64)
}

fn map_group(group: &[u8]) -> C64 {
    match group.len() {
        1 => C64::new(1.0 - 2.0 * group[0] as f64, 0.0),
        2 => {
            let a = core::f64::consts::FRAC_1_SQRT_2;
            C64::new(a * (1.0 - 2.0 * group[0] as f64), a * (1.0 - 2.0 * group[1] as f64))
        }
        _ => {
            let a = 1.0 / math::sqrt(10.0);
            C64::new(a * axis_level(group[0], group[1]), a * axis_level(group[2], group[3]))
        }
    }
}

/// All `2^m` points with their labels; bit `i` of the group is bit
/// `m − 1 − i` of the label.
pub fn constellation(m: usize) -> Result<Vec<(C64, u8)>> {
    check_order(m)?;
    Ok((0..1u8 << m)
        .map(|label| {
            let group: Vec<u8> = (0..m).map(|i| (label >> (m - 1 - i)) & 1).collect();
            (map_group(&group), label)
        })
        .collect())
}

pub fn gray_qam_map(bits: &[u8], m: usize) -> Result<ComplexVec> {
    check_order(m)?;
    if bits.len() % m != 0 {
        return Err(Error::Shape(format!(
            "{} bits not divisible by m = {m}",
            bits.len()
        )));
    }
    let mut out = ComplexVec::with_capacity(bits.len() / m);
    for group in bits.chunks_exact(m) {
        out.push(map_group(group));
    }
    Ok(out)
}

/// Exact per-bit posteriors under circular Gaussian noise with per-component
/// variance `noise_var`, equiprobable symbols. Hard bit = argmax (ties → 0).
pub fn qam_soft_demod(symbols: &ComplexVec, m: usize, noise_var: f64) -> Result<BitBlock> {
    let points = constellation(m)?;
    if !(noise_var > 0.0) {
        return Err(Error::Shape(format!("noise variance {noise_var} must be positive")));
    }
    let inv = 1.0 / (2.0 * noise_var);
    let mut bits = Vec::with_capacity(symbols.len() * m);
    let mut soft = Vec::with_capacity(2 * symbols.len() * m);
    let mut metric = [0.0f64; 16];
    for s in 0..symbols.len() {
        let y = symbols.get(s);
        let mut best = f64::NEG_INFINITY;
        for (i, (c, _)) in points.iter().enumerate() {
            let d = C64::new(y.re - c.re, y.im - c.im).norm_sqr();
            metric[i] = -d * inv;
            best = best.max(metric[i]);
        }
        for b in 0..m {
            let shift = m - 1 - b;
            let (mut w0, mut w1) = (0.0, 0.0);
            for (i, (_, label)) in points.iter().enumerate() {
                let w = math::exp(metric[i] - best);
                if (label >> shift) & 1 == 0 {
                    w0 += w;
                } else {
                    w1 += w;
                }
            }
            let p1 = w1 / (w0 + w1);
            let p0 = 1.0 - p1;
            soft.push(p0);
            soft.push(p1);
            bits.push(u8::from(p1 > p0));
        }
    }
    BitBlock::with_soft(bits, soft)
}
