use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::deploy::{int_mix_block, QLinear};
use crate::{Error, Result};

/// Conv1D unit: a 4 → 2 mix per position on every lane, one output position
/// per cycle per lane. Each lane is a `[4, L]` block; returns `[2, L]` per
/// lane, the saturation count and `L` cycles.
pub fn conv_unit_execute(lanes: &[Vec<i8>], len: usize, mix: &QLinear) -> Result<(Vec<Vec<i8>>, u64, u64)> {
    if mix.in_dim != 4 || mix.out_dim != 2 {
        return Err(Error::Shape(format!(
            "conv unit needs a 4→2 mix, got {}→{}",
            mix.in_dim, mix.out_dim
        )));
    }
    let mut sat = 0u64;
    let mut out = Vec::with_capacity(lanes.len());
    for x in lanes {
        if x.len() != 4 * len {
            return Err(Error::Shape(format!("conv lane has {} values, expected {}", x.len(), 4 * len)));
        }
        let mut y = vec![0i8; 2 * len];
        let (y0, y1) = y.split_at_mut(len);
        int_mix_block(mix, [&x[..len], &x[len..2 * len], &x[2 * len..3 * len], &x[3 * len..]], [y0, y1], &mut sat);
        out.push(y);
    }
    Ok((out, sat, len as u64))
}
