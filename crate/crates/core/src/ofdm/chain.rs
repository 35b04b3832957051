use super::{
    add_cp, build_freq_frame, extract_data, fft_fixed_point, fft_radix2, gray_qam_map,
    ifft_radix2, idft, qam_soft_demod, remove_cp, BitBlock, ComplexVec, FrameConfig,
};
use crate::{Error, Result};

/// Transform used by the conventional receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FftEngine {
    #[default]
    Float,
    /// Radix-2 FFT in the `(16, 2)` fixed-point format.
    Fixed16,
}

/// Map → frame → IDFT (with `1/N`) → cyclic prefix. Returns `F × S` samples.
pub fn conventional_tx(bits: &[u8], cfg: &FrameConfig) -> Result<ComplexVec> {
    let expected = cfg.bits_per_frame();
    if bits.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: bits.len(),
        });
    }
    let data = gray_qam_map(bits, cfg.mod_order_bits)?;
    let grid = build_freq_frame(&data, cfg)?;
    let n = cfg.n_fft;
    let mut out = ComplexVec::with_capacity(cfg.samples_per_frame());
    for s in 0..cfg.syms_per_frame {
        let row = grid.slice(s * n, (s + 1) * n);
        let time = if n.is_power_of_two() {
            ifft_radix2(&row)?
        } else {
            idft(&row)
        };
        out.extend_from(&add_cp(&time, cfg.cp_len)?);
    }
    Ok(out)
}

/// CP removal and forward transform of every symbol; returns the `F × N`
/// frequency grid.
pub fn conventional_rx_grid(
    samples: &ComplexVec,
    cfg: &FrameConfig,
    engine: FftEngine,
) -> Result<ComplexVec> {
    let (n, s_len) = (cfg.n_fft, cfg.sym_len());
    if samples.len() != cfg.samples_per_frame() {
        return Err(Error::LengthMismatch {
            expected: cfg.samples_per_frame(),
            got: samples.len(),
        });
    }
    let mut grid = ComplexVec::with_capacity(n * cfg.syms_per_frame);
    for s in 0..cfg.syms_per_frame {
        let sym = remove_cp(&samples.slice(s * s_len, (s + 1) * s_len), n, cfg.cp_len)?;
        let freq = match engine {
            FftEngine::Float => fft_radix2(&sym)?,
            FftEngine::Fixed16 => fft_fixed_point(&sym, 16, 2)?.value,
        };
        grid.extend_from(&freq);
    }
    Ok(grid)
}

/// Full conventional receiver. `noise_var` is the per-complex-sample noise
/// variance in the time domain; after the unscaled DFT each frequency bin sees
/// `N · noise_var`, i.e. `N · noise_var / 2` per component.
pub fn conventional_rx(
    samples: &ComplexVec,
    cfg: &FrameConfig,
    noise_var: f64,
    engine: FftEngine,
) -> Result<BitBlock> {
    let grid = conventional_rx_grid(samples, cfg, engine)?;
    let data = extract_data(&grid, cfg)?;
    let per_component = (cfg.n_fft as f64 * noise_var / 2.0).max(1e-300);
    qam_soft_demod(&data, cfg.mod_order_bits, per_component)
}
