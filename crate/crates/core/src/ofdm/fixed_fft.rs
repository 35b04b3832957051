//! Radix-2 FFT in two's-complement fixed point.
//!
//! A `(total_bits, int_bits)` format carries `int_bits` integer bits
//! (sign included) and `total_bits − int_bits` fraction bits; `(16, 2)` is
//! Q1.14 with an LSB of 2⁻¹⁴ and range [−2, 2). Inputs, twiddles and every
//! butterfly output are rounded to nearest and saturated. No per-stage
//! scaling is applied, so the format must cover the unscaled output range.

use alloc::vec::Vec;

use super::transform::twiddles;
use super::ComplexVec;
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FixedFftOutput {
    pub value: ComplexVec,
    /// Number of values clipped to the representable range.
    pub saturations: usize,
}

struct Format {
    frac: u32,
    min: i64,
    max: i64,
}

impl Format {
    fn new(total_bits: u32, int_bits: u32) -> Result<Self> {
        if total_bits < 2 || total_bits > 32 || int_bits == 0 || int_bits >= total_bits {
            return Err(Error::Config(alloc::format!(
                "fixed-point format ({total_bits},{int_bits}) unsupported"
            )));
        }
        Ok(Self {
            frac: total_bits - int_bits,
            min: -(1i64 << (total_bits - 1)),
            max: (1i64 << (total_bits - 1)) - 1,
        })
    }

    fn sat(&self, v: i64, count: &mut usize) -> i64 {
        if v > self.max {
            *count += 1;
            self.max
        } else if v < self.min {
            *count += 1;
            self.min
        } else {
            v
        }
    }

    fn quantize(&self, x: f64, count: &mut usize) -> i64 {
        let scaled = math::floor(x * (1i64 << self.frac) as f64 + 0.5);
        let clamped = scaled.clamp(-(1i64 << 62) as f64, (1i64 << 62) as f64) as i64;
        self.sat(clamped, count)
    }

    /// Product of two values in this format, rounded back into it.
    fn mul(&self, a: i64, b: i64) -> i64 {
        let p = a * b;
        (p + (1i64 << (self.frac - 1))) >> self.frac
    }

    fn to_f64(&self, v: i64) -> f64 {
        v as f64 / (1i64 << self.frac) as f64
    }
}

pub fn fft_fixed_point(x: &ComplexVec, total_bits: u32, int_bits: u32) -> Result<FixedFftOutput> {
    let n = x.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let fmt = Format::new(total_bits, int_bits)?;
    let mut sat = 0usize;
    let mut re: Vec<i64> = x.re.iter().map(|&v| fmt.quantize(v, &mut sat)).collect();
    let mut im: Vec<i64> = x.im.iter().map(|&v| fmt.quantize(v, &mut sat)).collect();

    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }

    let (wr_f, wi_f) = twiddles(n);
    let mut tw_sat = 0usize;
    let wr: Vec<i64> = wr_f.iter().map(|&v| fmt.quantize(v, &mut tw_sat)).collect();
    let wi: Vec<i64> = wi_f.iter().map(|&v| fmt.quantize(v, &mut tw_sat)).collect();
    sat += tw_sat;

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let (c, s) = (wr[k * stride], wi[k * stride]);
                let (p, q) = (start + k, start + k + half);
                let tr = fmt.sat(fmt.mul(re[q], c) - fmt.mul(im[q], s), &mut sat);
                let ti = fmt.sat(fmt.mul(re[q], s) + fmt.mul(im[q], c), &mut sat);
                let (pr, pi) = (re[p], im[p]);
                re[p] = fmt.sat(pr + tr, &mut sat);
                im[p] = fmt.sat(pi + ti, &mut sat);
                re[q] = fmt.sat(pr - tr, &mut sat);
                im[q] = fmt.sat(pi - ti, &mut sat);
            }
        }
        len <<= 1;
    }

    Ok(FixedFftOutput {
        value: ComplexVec {
            re: re.iter().map(|&v| fmt.to_f64(v)).collect(),
            im: im.iter().map(|&v| fmt.to_f64(v)).collect(),
        },
        saturations: sat,
    })
}
