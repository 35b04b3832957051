use alloc::vec::Vec;

use crate::models::layout::samples_to_rows;
use crate::models::SystemVariant;
use crate::nn::RealTensor;
use crate::ofdm::awgn_with;
use crate::rng::SimRng;
use crate::Result;

/// Default number of calibration frames.
pub const CALIB_FRAMES: usize = 256;

/// Received rows `[frames·2F, S]` for `frames` random frames, each at an SNR
/// drawn uniformly from `snr_range_db`, transmitted by `v`'s own TX side.
pub fn calibration_rows(v: &SystemVariant, frames: usize, snr_range_db: [f64; 2], seed: u64) -> Result<RealTensor> {
    let cfg = &v.cfg;
    let (syms, s) = (cfg.syms_per_frame, cfg.sym_len());
    let mut rng = SimRng::stream(seed, 0xca1b);
    let mut rows = Vec::with_capacity(frames * 2 * syms * s);
    for _ in 0..frames {
        let bits = rng.bits(cfg.bits_per_frame());
        let snr = rng.uniform(snr_range_db[0], snr_range_db[1]);
        let (y, _) = awgn_with(&v.transmit(&bits)?, snr, &mut rng)?;
        rows.extend(samples_to_rows(&y, syms, s)?.into_data());
    }
    RealTensor::new(&[frames * 2 * syms, s], rows)
}
