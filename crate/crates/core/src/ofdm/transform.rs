use alloc::vec::Vec;

use super::ComplexVec;
use crate::math;
use crate::{Error, Result};

fn direct(x: &ComplexVec, sign: f64, scale: f64) -> ComplexVec {
    let n = x.len();
    let mut out = ComplexVec::zeros(n);
    for k in 0..n {
        let (mut acc_re, mut acc_im) = (0.0, 0.0);
        for t in 0..n {
            let a = math::twiddle_angle(k, t, n);
            let (c, s) = (math::cos(a), sign * math::sin(a));
            acc_re += x.re[t] * c - x.im[t] * s;
            acc_im += x.re[t] * s + x.im[t] * c;
        }
        out.re[k] = acc_re * scale;
        out.im[k] = acc_im * scale;
    }
    out
}

/// `X[k] = Σ x[n] e^{−j2πkn/N}` by direct matrix evaluation.
pub fn dft(x: &ComplexVec) -> ComplexVec {
    direct(x, -1.0, 1.0)
}

/// `x[n] = (1/N) Σ X[k] e^{+j2πkn/N}` by direct matrix evaluation.
pub fn idft(x: &ComplexVec) -> ComplexVec {
    let n = x.len().max(1);
    direct(x, 1.0, 1.0 / n as f64)
}

fn bit_reverse_permute(x: &mut ComplexVec) {
    let n = x.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            x.re.swap(i, j);
            x.im.swap(i, j);
        }
    }
}

/// Twiddles `e^{−j2πk/N}` for `k < N/2`.
pub(super) fn twiddles(n: usize) -> (Vec<f64>, Vec<f64>) {
    (0..n / 2)
        .map(|k| {
            let a = math::twiddle_angle(k, 1, n);
            (math::cos(a), -math::sin(a))
        })
        .unzip()
}

/// Unscaled decimation-in-time radix-2 FFT.
pub fn fft_radix2(x: &ComplexVec) -> Result<ComplexVec> {
    let n = x.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut a = x.clone();
    bit_reverse_permute(&mut a);
    let (wr, wi) = twiddles(n);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for j in 0..half {
                let (c, s) = (wr[j * stride], wi[j * stride]);
                let (p, q) = (start + j, start + j + half);
                let tr = a.re[q] * c - a.im[q] * s;
                let ti = a.re[q] * s + a.im[q] * c;
                a.re[q] = a.re[p] - tr;
                a.im[q] = a.im[p] - ti;
                a.re[p] += tr;
                a.im[p] += ti;
            }
        }
        len <<= 1;
    }
    Ok(a)
}

/// Inverse FFT with the `1/N` scaling, via conjugation.
pub fn ifft_radix2(x: &ComplexVec) -> Result<ComplexVec> {
    let n = x.len();
    let conj = ComplexVec {
        re: x.re.clone(),
        im: x.im.iter().map(|v| -v).collect(),
    };
    let mut y = fft_radix2(&conj)?;
    let scale = 1.0 / n as f64;
    for v in &mut y.re {
        *v *= scale;
    }
    for v in &mut y.im {
        *v *= -scale;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;

    fn random(n: usize, seed: u64) -> ComplexVec {
        let mut rng = SimRng::new(seed);
        ComplexVec {
            re: (0..n).map(|_| rng.gaussian()).collect(),
            im: (0..n).map(|_| rng.gaussian()).collect(),
        }
    }

    #[test]
    fn impulse_and_dc() {
        let mut d = ComplexVec::zeros(64);
        d.re[0] = 1.0;
        let y = dft(&d);
        assert!(y.re.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(y.im.iter().all(|v| v.abs() < 1e-12));
        let ones = ComplexVec::new(alloc::vec![1.0; 64], alloc::vec![0.0; 64]).unwrap();
        let y = dft(&ones);
        assert!((y.re[0] - 64.0).abs() < 1e-9);
        assert!(y.re[1..].iter().chain(&y.im).all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn two_point_butterfly() {
        let x = ComplexVec::new(alloc::vec![3.0, 5.0], alloc::vec![1.0, -2.0]).unwrap();
        let y = fft_radix2(&x).unwrap();
        assert_eq!(y.re, alloc::vec![8.0, -2.0]);
        assert_eq!(y.im, alloc::vec![-1.0, 3.0]);
    }

    #[test]
    fn fft_matches_matrix_dft() {
        for seed in 0..5 {
            let x = random(64, seed);
            assert!(fft_radix2(&x).unwrap().max_abs_diff(&dft(&x)) <= 1e-9);
        }
    }

    #[test]
    fn inverse_round_trips() {
        let x = random(64, 11);
        assert!(idft(&dft(&x)).max_abs_diff(&x) <= 1e-9);
        assert!(ifft_radix2(&fft_radix2(&x).unwrap()).unwrap().max_abs_diff(&x) <= 1e-12);
        assert!(ifft_radix2(&x).unwrap().max_abs_diff(&idft(&x)) <= 1e-12);
    }

    #[test]
    fn fft_linearity() {
        let (x, y) = (random(64, 1), random(64, 2));
        let (a, b) = (0.7, -1.3);
        let combo = ComplexVec {
            re: x.re.iter().zip(&y.re).map(|(p, q)| a * p + b * q).collect(),
            im: x.im.iter().zip(&y.im).map(|(p, q)| a * p + b * q).collect(),
        };
        let (fx, fy) = (fft_radix2(&x).unwrap(), fft_radix2(&y).unwrap());
        let expect = ComplexVec {
            re: fx.re.iter().zip(&fy.re).map(|(p, q)| a * p + b * q).collect(),
            im: fx.im.iter().zip(&fy.im).map(|(p, q)| a * p + b * q).collect(),
        };
        assert!(fft_radix2(&combo).unwrap().max_abs_diff(&expect) <= 1e-9);
    }

    #[test]
    fn parseval() {
        let x = random(64, 5);
        let ratio = dft(&x).energy() / (64.0 * x.energy());
        assert!((ratio - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn non_power_of_two_rejected() {
        assert_eq!(fft_radix2(&ComplexVec::zeros(48)), Err(Error::NotPowerOfTwo(48)));
        assert_eq!(fft_radix2(&ComplexVec::zeros(0)), Err(Error::NotPowerOfTwo(0)));
    }
}
