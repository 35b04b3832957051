//! Small statistics helpers for BER curves.

/// Two-sided 95 % normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `errors` successes out of `bits` trials.
pub fn wilson_interval(errors: u64, bits: u64) -> (f64, f64) {
    if bits == 0 {
        return (0.0, 1.0);
    }
    let n = bits as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The bounds reach 0 and 1 exactly at the extremes; pin them against
    // rounding.
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors == bits { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// SNR at which a BER curve crosses `target`, interpolating linearly in
/// `log10(BER)` between the two bracketing points. `points` are
/// `(snr_db, ber)` sorted by SNR; `None` when the curve never brackets it.
pub fn snr_at_ber(points: &[(f64, f64)], target: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        if b0 >= target && b1 <= target && b0 > 0.0 && b1 > 0.0 {
            if b0 == b1 {
                return Some(s0);
            }
            let t = (b0.log10() - target.log10()) / (b0.log10() - b1.log10());
            Some(s0 + t * (s1 - s0))
        } else {
            None
        }
    })
}
