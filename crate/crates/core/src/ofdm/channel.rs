use super::ComplexVec;
use crate::math;
use crate::rng::SimRng;
use crate::{Error, Result};

/// Mean `|x|²` per complex sample.
pub fn signal_power(x: &ComplexVec) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.energy() / x.len() as f64
    }
}

/// Per-complex-sample noise variance for a signal of power `power`.
pub fn noise_variance(power: f64, snr_db: f64) -> f64 {
    power / math::db_to_linear(snr_db)
}

/// Add circularly-symmetric Gaussian noise at `snr_db` relative to the
/// measured power of `x`. Returns the noisy samples and the per-complex-sample
/// noise variance that was used.
pub fn awgn_with(x: &ComplexVec, snr_db: f64, rng: &mut SimRng) -> Result<(ComplexVec, f64)> {
    if x.is_empty() {
        return Err(Error::Shape("awgn on an empty signal".into()));
    }
    let var = noise_variance(signal_power(x), snr_db);
    let sigma = math::sqrt(var / 2.0);
    let mut y = x.clone();
    for (r, i) in y.re.iter_mut().zip(y.im.iter_mut()) {
        *r += sigma * rng.gaussian();
        *i += sigma * rng.gaussian();
    }
    Ok((y, var))
}

pub fn awgn(x: &ComplexVec, snr_db: f64, seed: u64) -> Result<ComplexVec> {
    awgn_with(x, snr_db, &mut SimRng::new(seed)).map(|(y, _)| y)
}
