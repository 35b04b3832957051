use alloc::format;
use alloc::vec::Vec;

use super::{ComplexVec, C64};
use crate::{Error, Result};

/// OFDM numerology and subcarrier layout.
///
/// The default profile is the 802.11-like frame: 64 subcarriers, a quarter
/// cyclic prefix, 8 pilots, 10 nulls and 8 symbols per frame, which leaves
/// 46 data subcarriers per symbol and 368 per frame.
///
/// Default layout (bin indices in FFT order):
///
/// * nulls: DC bin 0 and bins 28..=36 (the Nyquist bin 32 plus four edge
///   guards on either side of it);
/// * pilots: bins 3, 10, 17, 24, 40, 47, 54, 61 (signed frequencies
///   ±3, ±10, ±17, ±24), value `(1 + j)/√2` on every symbol;
/// * data: every other bin, filled in ascending bin order, symbol by symbol.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FrameConfig {
    pub n_fft: usize,
    pub cp_len: usize,
    pub pilots_per_sym: usize,
    pub guard_side: usize,
    pub guard_dc: usize,
    pub syms_per_frame: usize,
    pub mod_order_bits: usize,
    pub sample_rate_hz: f64,
    pub pilot_indices: Vec<usize>,
    pub null_indices: Vec<usize>,
    pub pilot_value: C64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        Self {
            n_fft: 64,
            cp_len: 16,
            pilots_per_sym: 8,
            guard_side: 8,
            guard_dc: 2,
            syms_per_frame: 8,
            mod_order_bits: 2,
            sample_rate_hz: 20e6,
            pilot_indices: alloc::vec![3, 10, 17, 24, 40, 47, 54, 61],
            null_indices: alloc::vec![0, 28, 29, 30, 31, 32, 33, 34, 35, 36],
            pilot_value: C64::new(h, h),
        }
    }
}

impl FrameConfig {
    /// Default layout with a different modulation order.
    pub fn with_modulation(mod_order_bits: usize) -> Self {
        Self {
            mod_order_bits,
            ..Self::default()
        }
    }

    /// Symbol length `S = N + Ncp`.
    pub fn sym_len(&self) -> usize {
        self.n_fft + self.cp_len
    }

    pub fn data_per_sym(&self) -> usize {
        self.n_fft - self.guard_side - self.guard_dc - self.pilots_per_sym
    }

    /// Data subcarriers per frame (`D` in the frame tables).
    pub fn data_per_frame(&self) -> usize {
        self.data_per_sym() * self.syms_per_frame
    }

    pub fn bits_per_frame(&self) -> usize {
        self.data_per_frame() * self.mod_order_bits
    }

    /// Time-domain samples per frame, cyclic prefixes included.
    pub fn samples_per_frame(&self) -> usize {
        self.sym_len() * self.syms_per_frame
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.sample_rate_hz / self.n_fft as f64
    }

    /// Data bins of one symbol in fill order.
    pub fn data_indices(&self) -> Vec<usize> {
        (0..self.n_fft)
            .filter(|k| !self.pilot_indices.contains(k) && !self.null_indices.contains(k))
            .collect()
    }

    /// Expected per-sample power of a conventionally transmitted frame with
    /// unit-energy symbols and the `1/N` IDFT scaling.
    pub fn nominal_tx_power(&self) -> f64 {
        let used = (self.data_per_sym() + self.pilots_per_sym) as f64;
        used / (self.n_fft * self.n_fft) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::Config(msg));
        if self.n_fft == 0 {
            return bad(format!("n_fft must be positive"));
        }
        if !matches!(self.mod_order_bits, 1 | 2 | 4) {
            return bad(format!("mod_order_bits {} not in {{1,2,4}}", self.mod_order_bits));
        }
        if self.syms_per_frame == 0 {
            return bad(format!("syms_per_frame must be positive"));
        }
        if self.cp_len > self.n_fft {
            return bad(format!("cp_len {} exceeds n_fft {}", self.cp_len, self.n_fft));
        }
        if self.guard_side + self.guard_dc + self.pilots_per_sym >= self.n_fft {
            return bad(format!("no data subcarriers left"));
        }
        if self.pilot_indices.len() != self.pilots_per_sym {
            return bad(format!(
                "{} pilot indices for pilots_per_sym = {}",
                self.pilot_indices.len(),
                self.pilots_per_sym
            ));
        }
        if self.null_indices.len() != self.guard_side + self.guard_dc {
            return bad(format!(
                "{} null indices for {} guards",
                self.null_indices.len(),
                self.guard_side + self.guard_dc
            ));
        }
        let mut seen = alloc::vec![false; self.n_fft];
        for &k in self.pilot_indices.iter().chain(&self.null_indices) {
            if k >= self.n_fft || seen[k] {
                return bad(format!("subcarrier index {k} out of range or repeated"));
            }
            seen[k] = true;
        }
        if (self.pilot_value.norm_sqr() - 1.0).abs() > 1e-9 {
            return bad(format!("pilot value must have unit magnitude"));
        }
        Ok(())
    }
}

/// Place `data` (length `F × data_per_sym`) onto an `F × N` frequency grid,
/// stored row-major, with pilots and zeroed guards.
pub fn build_freq_frame(data: &ComplexVec, cfg: &FrameConfig) -> Result<ComplexVec> {
    let expected = cfg.data_per_frame();
    if data.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: data.len(),
        });
    }
    let n = cfg.n_fft;
    let data_idx = cfg.data_indices();
    let mut grid = ComplexVec::zeros(n * cfg.syms_per_frame);
    let mut next = 0;
    for s in 0..cfg.syms_per_frame {
        let row = s * n;
        for &k in &cfg.pilot_indices {
            grid.set(row + k, cfg.pilot_value);
        }
        for &k in &data_idx {
            grid.set(row + k, data.get(next));
            next += 1;
        }
    }
    Ok(grid)
}

/// Inverse of [`build_freq_frame`] on the data positions.
pub fn extract_data(grid: &ComplexVec, cfg: &FrameConfig) -> Result<ComplexVec> {
    let n = cfg.n_fft;
    let expected = n * cfg.syms_per_frame;
    if grid.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: grid.len(),
        });
    }
    let data_idx = cfg.data_indices();
    let mut out = ComplexVec::with_capacity(cfg.data_per_frame());
    for s in 0..cfg.syms_per_frame {
        for &k in &data_idx {
            out.push(grid.get(s * n + k));
        }
    }
    Ok(out)
}

/// Prepend the last `cp_len` samples of a symbol.
pub fn add_cp(x: &ComplexVec, cp_len: usize) -> Result<ComplexVec> {
    if cp_len > x.len() {
        return Err(Error::Shape(format!(
            "cp_len {cp_len} longer than symbol {}",
            x.len()
        )));
    }
    let n = x.len();
    let mut out = ComplexVec::with_capacity(n + cp_len);
    out.re.extend_from_slice(&x.re[n - cp_len..]);
    out.im.extend_from_slice(&x.im[n - cp_len..]);
    out.extend_from(x);
    Ok(out)
}

/// Drop the cyclic prefix of a symbol of length `n_fft + cp_len`.
pub fn remove_cp(y: &ComplexVec, n_fft: usize, cp_len: usize) -> Result<ComplexVec> {
    if y.len() != n_fft + cp_len {
        return Err(Error::LengthMismatch {
            expected: n_fft + cp_len,
            got: y.len(),
        });
    }
    Ok(y.slice(cp_len, cp_len + n_fft))
}
