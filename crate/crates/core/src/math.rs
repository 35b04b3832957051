//! Thin wrappers over `libm` so the crate stays `no_std`.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Round half to even.
#[inline]
pub fn round_even(x: f64) -> f64 {
    libm::rint(x)
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// Angle `2πkn/N` reduced modulo `N` before the trig call so large products
/// keep full precision.
#[inline]
pub fn twiddle_angle(k: usize, n: usize, len: usize) -> f64 {
    let r = (k * n) % len;
    2.0 * core::f64::consts::PI * r as f64 / len as f64
}
