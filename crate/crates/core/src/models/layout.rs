//! Conversions between serial complex samples and the row layouts the
//! networks consume.

use alloc::vec;
use alloc::vec::Vec;

use crate::nn::RealTensor;
use crate::ofdm::ComplexVec;
use crate::Result;

/// Serial samples of `syms` symbols of length `s` to rows `[2·syms, s]`,
/// alternating real and imaginary parts per symbol.
pub fn samples_to_rows(x: &ComplexVec, syms: usize, s: usize) -> Result<RealTensor> {
    let mut out = Vec::with_capacity(2 * syms * s);
    for k in 0..syms {
        out.extend_from_slice(&x.re[k * s..(k + 1) * s]);
        out.extend_from_slice(&x.im[k * s..(k + 1) * s]);
    }
    RealTensor::new(&[2 * syms, s], out)
}

/// Inverse of [`samples_to_rows`].
pub fn rows_to_samples(rows: &RealTensor) -> ComplexVec {
    let s = rows.last_dim();
    let mut out = ComplexVec::with_capacity(rows.len() / 2);
    for pair in rows.data().chunks_exact(2 * s) {
        out.re.extend_from_slice(&pair[..s]);
        out.im.extend_from_slice(&pair[s..]);
    }
    out
}

/// `F × N` frequency grid to rows `[2F, S]`, zero-padded from `N` to `S`.
pub fn grid_to_rows(grid: &ComplexVec, n: usize, s: usize) -> Result<RealTensor> {
    let syms = grid.len() / n;
    let mut out = vec![0.0; 2 * syms * s];
    for k in 0..syms {
        out[2 * k * s..2 * k * s + n].copy_from_slice(&grid.re[k * n..(k + 1) * n]);
        out[(2 * k + 1) * s..(2 * k + 1) * s + n].copy_from_slice(&grid.im[k * n..(k + 1) * n]);
    }
    RealTensor::new(&[2 * syms, s], out)
}

/// First `n` columns of every row pair, as an `F × N` grid.
pub fn rows_to_grid(rows: &RealTensor, n: usize) -> ComplexVec {
    let s = rows.last_dim();
    let mut out = ComplexVec::with_capacity(rows.len() / 2 / s * n);
    for pair in rows.data().chunks_exact(2 * s) {
        out.re.extend_from_slice(&pair[..n]);
        out.im.extend_from_slice(&pair[s..s + n]);
    }
    out
}

/// Rows `[B·2F, S]` to demodulator input `[B, 2, F·S]`: the real channel is
/// the concatenation of every symbol's real row, then the imaginary channel.
pub fn rows_to_frame_channels(rows: &RealTensor, frames: usize) -> Result<RealTensor> {
    let s = rows.last_dim();
    let syms = rows.leading() / 2 / frames;
    let len = syms * s;
    let mut out = vec![0.0; frames * 2 * len];
    for (r, row) in rows.data().chunks_exact(s).enumerate() {
        let (b, k, part) = (r / (2 * syms), (r / 2) % syms, r % 2);
        let at = b * 2 * len + part * len + k * s;
        out[at..at + s].copy_from_slice(row);
    }
    RealTensor::new(&[frames, 2, len], out)
}

/// Inverse of [`rows_to_frame_channels`].
pub fn frame_channels_to_rows(x: &RealTensor, s: usize) -> Result<RealTensor> {
    let sh = x.shape();
    let (frames, len) = (sh[0], sh[2]);
    let syms = len / s;
    let mut out = vec![0.0; frames * 2 * len];
    for b in 0..frames {
        for k in 0..syms {
            for part in 0..2 {
                let src = b * 2 * len + part * len + k * s;
                let dst = ((b * syms + k) * 2 + part) * s;
                out[dst..dst + s].copy_from_slice(&x.data()[src..src + s]);
            }
        }
    }
    RealTensor::new(&[frames * 2 * syms, s], out)
}
