use alloc::vec;
use alloc::vec::Vec;

use crate::math::{floor, round_even};
use crate::{Error, Result};

/// Smallest scale handed out when a calibration stream is all zeros.
pub const MIN_SCALE: f64 = 1e-12;
pub const QMAX: i32 = 127;
pub const HIST_BINS: usize = 2048;
pub const PERCENTILE: f64 = 0.9999;

/// Symmetric per-tensor INT8 quantization; the zero point is always 0.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuantParams {
    pub scale: f64,
}

impl QuantParams {
    pub fn new(scale: f64) -> Result<Self> {
        if scale > 0.0 && scale.is_finite() {
            Ok(Self { scale })
        } else {
            Err(Error::Config(alloc::format!("quantization scale {scale} must be positive")))
        }
    }

    pub const fn zero_point(&self) -> i32 {
        0
    }

    pub const fn bits(&self) -> u32 {
        8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CalibMode {
    Histogram,
    MaxAbs,
}

/// Scale for an activation or weight stream.
///
/// Histogram mode builds a 2048-bin histogram of `|x|` over `[0, max|x|]` and
/// takes the 99.99th percentile, linearly interpolated inside its bin.
pub fn calibrate(samples: &[f64], mode: CalibMode) -> Result<QuantParams> {
    if samples.is_empty() {
        return Err(Error::Config("calibration stream is empty".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("calibration stream contains non-finite values".into()));
    }
    let max = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        log::warn!("calibration stream is all zeros; using the minimal scale");
        return QuantParams::new(MIN_SCALE);
    }
    let range = match mode {
        CalibMode::MaxAbs => max,
        CalibMode::Histogram => {
            let mut hist = vec![0u64; HIST_BINS];
            let width = max / HIST_BINS as f64;
            for v in samples {
                let b = ((v.abs() / width) as usize).min(HIST_BINS - 1);
                hist[b] += 1;
            }
            let target = PERCENTILE * samples.len() as f64;
            let mut cum = 0.0;
            let mut value = max;
            for (b, &c) in hist.iter().enumerate() {
                let next = cum + c as f64;
                if next >= target && c > 0 {
                    let frac = (target - cum) / c as f64;
                    value = (b as f64 + frac) * width;
                    break;
                }
                cum = next;
            }
            value.max(width)
        }
    };
    QuantParams::new((range / QMAX as f64).max(MIN_SCALE))
}

/// `q = clamp(round_half_even(x / scale), −127, 127)`.
pub fn quantize_tensor(x: &[f64], qp: QuantParams) -> Vec<i8> {
    x.iter()
        .map(|&v| round_even(v / qp.scale).clamp(-(QMAX as f64), QMAX as f64) as i8)
        .collect()
}

pub fn dequantize(q: &[i8], qp: QuantParams) -> Vec<f64> {
    q.iter().map(|&v| v as f64 * qp.scale).collect()
}

/// Integer multiplier and right shift approximating a real rescale ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RequantFactor {
    pub m: i32,
    pub n: u32,
}

pub const REQUANT_M_LIMIT: i64 = 1 << 15;
pub const REQUANT_MAX_SHIFT: u32 = 31;

impl RequantFactor {
    pub fn ratio(&self) -> f64 {
        self.m as f64 / (1u64 << self.n) as f64
    }

    /// `(acc·m + 2^(n−1)) >> n`, saturated to `[−127, 127]`. Returns the
    /// value and whether it saturated.
    #[inline]
    pub fn apply(&self, acc: i32) -> (i8, bool) {
        let prod = acc as i64 * self.m as i64;
        let rounded = if self.n == 0 {
            prod
        } else {
            (prod + (1i64 << (self.n - 1))) >> self.n
        };
        if rounded > QMAX as i64 {
            (QMAX as i8, true)
        } else if rounded < -(QMAX as i64) {
            (-QMAX as i8, true)
        } else {
            (rounded as i8, false)
        }
    }

    /// Same rounding evaluated in floating point on the exact integer
    /// accumulator: `floor(acc·m / 2ⁿ + 0.5)`, then saturation.
    pub fn apply_real(&self, acc: f64) -> f64 {
        let v = floor(acc * self.m as f64 / (1u64 << self.n) as f64 + 0.5);
        v.clamp(-(QMAX as f64), QMAX as f64)
    }
}

/// Largest shift `n ≤ 31` such that `round(ratio·2ⁿ) < 2¹⁵`, with `m` that
/// rounding.
pub fn derive_requant(s_in: f64, s_w: f64, s_out: f64) -> Result<RequantFactor> {
    if !(s_in > 0.0 && s_w > 0.0 && s_out > 0.0) {
        return Err(Error::Config("requantization scales must be positive".into()));
    }
    let ratio = s_in * s_w / s_out;
    for n in (0..=REQUANT_MAX_SHIFT).rev() {
        let m = libm::round(ratio * (1u64 << n) as f64);
        if m < REQUANT_M_LIMIT as f64 {
            if m < 1.0 {
                return Err(Error::RequantRange(ratio));
            }
            return Ok(RequantFactor { m: m as i32, n });
        }
    }
    Err(Error::RequantRange(ratio))
}
