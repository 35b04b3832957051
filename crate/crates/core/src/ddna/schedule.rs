use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::config::{LayerClass, PeaConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accumulate {
    /// Full reduction in one block.
    Whole,
    /// First chunk of a split reduction: writes buf4.
    First,
    /// Reads and writes buf4.
    Middle,
    /// Reads buf4 and produces the final sum.
    Last,
}

impl Accumulate {
    pub fn reads_partials(self) -> bool {
        matches!(self, Accumulate::Middle | Accumulate::Last)
    }

    pub fn is_final(self) -> bool {
        matches!(self, Accumulate::Whole | Accumulate::Last)
    }
}

/// One PEA-sized block: rows `row_start..row_start+a_rows` of A against the
/// weight tile `(k_start.., col_start..)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasicBlock {
    pub row_start: usize,
    pub a_rows: usize,
    pub k_start: usize,
    pub k_stream: usize,
    pub col_start: usize,
    pub b_cols: usize,
    pub weight_reuse: bool,
    pub accumulate: Accumulate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSchedule {
    pub class: LayerClass,
    /// `(rows, k)` of A and `(k, cols)` of B.
    pub a_shape: (usize, usize),
    pub b_shape: (usize, usize),
    pub blocks: Vec<BasicBlock>,
}

/// Splits `A (m×k) · B (k×n)` into PEA blocks, column tile by column tile.
///
/// Within a column tile the reduction is chunked (Demod layers only), and
/// within a chunk A rows are taken `pea.rows` at a time, so consecutive row
/// groups reuse the same weight tile.
pub fn decompose(a_shape: (usize, usize), b_shape: (usize, usize), pea: &PeaConfig, class: LayerClass) -> Result<BlockSchedule> {
    let (m, k) = a_shape;
    let (kb, n) = b_shape;
    if k != kb || m == 0 || k == 0 {
        return Err(Error::Schedule(format!(
            "cannot multiply {m}×{k} by {kb}×{n}"
        )));
    }
    if n == 0 || n % pea.cols != 0 {
        return Err(Error::Schedule(format!(
            "output width {n} is not a multiple of the PEA column count {}",
            pea.cols
        )));
    }
    let chunk = match class {
        LayerClass::Dft => k,
        LayerClass::Demod => pea.max_k.min(k),
    };
    let chunks: Vec<(usize, usize)> = (0..k)
        .step_by(chunk)
        .map(|s| (s, chunk.min(k - s)))
        .collect();
    let mut blocks = Vec::new();
    for col in (0..n).step_by(pea.cols) {
        for (ci, &(ks, kl)) in chunks.iter().enumerate() {
            let accumulate = match (chunks.len(), ci) {
                (1, _) => Accumulate::Whole,
                (_, 0) => Accumulate::First,
                (c, i) if i + 1 == c => Accumulate::Last,
                _ => Accumulate::Middle,
            };
            for (gi, r) in (0..m).step_by(pea.rows).enumerate() {
                blocks.push(BasicBlock {
                    row_start: r,
                    a_rows: pea.rows.min(m - r),
                    k_start: ks,
                    k_stream: kl,
                    col_start: col,
                    b_cols: pea.cols,
                    weight_reuse: gi > 0,
                    accumulate,
                });
            }
        }
    }
    Ok(BlockSchedule {
        class,
        a_shape,
        b_shape,
        blocks,
    })
}

impl BlockSchedule {
    pub fn macs(&self) -> u64 {
        let (m, k) = self.a_shape;
        (m * k * self.b_shape.1) as u64
    }

    /// Cycles inserted before a block's stream: weight reload not hidden by
    /// the previous block, plus buf4 partial-sum readback.
    pub fn overhead(&self, b: &BasicBlock, pea: &PeaConfig) -> u64 {
        let mut c = 0;
        if !b.weight_reuse && self.class == LayerClass::Demod {
            let load = (b.k_stream * b.b_cols).div_ceil(pea.dma_bytes_per_cycle);
            c += load.saturating_sub(pea.reload_overlap) as u64;
        }
        if b.accumulate.reads_partials() {
            c += pea.accumulate_cycles as u64;
        }
        c
    }
}

/// Drain latency of an output-stationary array after the last operand enters.
pub fn drain(pea: &PeaConfig) -> u64 {
    (pea.rows + pea.cols - 1) as u64
}

/// Cycle count of a sequence of schedules. Merged: blocks stream
/// back-to-back through the dual result registers and the array drains once.
/// Unmerged: every block streams and drains on its own.
pub fn pea_cycles(schedules: &[&BlockSchedule], pea: &PeaConfig, merged: bool) -> u64 {
    let mut total = 0;
    let mut nblocks = 0;
    for s in schedules {
        for b in &s.blocks {
            total += b.k_stream as u64 + s.overhead(b, pea);
            nblocks += 1;
        }
    }
    if nblocks == 0 {
        return 0;
    }
    if merged {
        total + drain(pea)
    } else {
        total + nblocks * drain(pea)
    }
}

/// Runs a schedule functionally: `A (m×k)` against weights `W (n×k)`
/// (row-major, i.e. `B = Wᵀ`), 32-bit accumulation with buf4 partial sums.
/// Returns the `m×n` accumulators and the cycle count.
pub fn pea_execute(
    schedule: &BlockSchedule,
    a: &[i8],
    w: &[i8],
    pea: &PeaConfig,
    merged: bool,
) -> Result<(Vec<i32>, u64)> {
    let (m, k) = schedule.a_shape;
    let n = schedule.b_shape.1;
    if a.len() != m * k || w.len() != n * k {
        return Err(Error::Shape(format!(
            "pea operands: A has {}, W has {} (expected {}, {})",
            a.len(),
            w.len(),
            m * k,
            n * k
        )));
    }
    let mut out = vec![0i32; m * n];
    // buf4: one partial-sum tile per row group of the current column tile.
    let groups = m.div_ceil(pea.rows);
    let mut buf4 = vec![0i32; groups * pea.rows * pea.cols];
    for b in &schedule.blocks {
        for r in 0..b.a_rows {
            let row = b.row_start + r;
            let ar = &a[row * k + b.k_start..row * k + b.k_start + b.k_stream];
            for c in 0..b.b_cols {
                let col = b.col_start + c;
                let wc = &w[col * k + b.k_start..col * k + b.k_start + b.k_stream];
                let dot: i32 = ar.iter().zip(wc).map(|(&x, &y)| x as i32 * y as i32).sum();
                let slot = &mut buf4[(b.row_start + r) * pea.cols + c];
                let acc = if b.accumulate.reads_partials() { *slot + dot } else { dot };
                if b.accumulate.is_final() {
                    out[row * n + col] = acc;
                } else {
                    *slot = acc;
                }
            }
        }
    }
    Ok((out, pea_cycles(&[schedule], pea, merged)))
}

/// Cycle-stepped model of the output-stationary array. PE `(i, j)` consumes
/// reduction index `s` of the block in flight at cycle `offset + s + i + j`;
/// a block is complete two cycles after its last MAC (final accumulate and
/// result-register handoff). Blocks are `(A tile rows×k, W tile cols×k)`;
/// `gaps[b]` cycles are idle before block `b` enters.
pub fn systolic_emulate(
    blocks: &[(Vec<i8>, Vec<i8>, usize)],
    rows: usize,
    cols: usize,
    gaps: &[u64],
) -> (Vec<Vec<i32>>, u64) {
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut t = 0u64;
    for (bi, (_, _, k)) in blocks.iter().enumerate() {
        t += gaps.get(bi).copied().unwrap_or(0);
        offsets.push(t);
        t += *k as u64;
    }
    let horizon = t + (rows + cols) as u64 + 2;
    let mut acc: Vec<Vec<i32>> = vec![vec![0; rows * cols]; blocks.len()];
    let mut last_mac = 0u64;
    for cycle in 0..horizon {
        for i in 0..rows {
            for j in 0..cols {
                let skew = (i + j) as u64;
                if cycle < skew {
                    continue;
                }
                let local = cycle - skew;
                // The block whose stream covers this PE-local time.
                let Some(bi) = offsets.iter().rposition(|&o| o <= local) else {
                    continue;
                };
                let (a, w, k) = &blocks[bi];
                let s = (local - offsets[bi]) as usize;
                if s >= *k {
                    continue;
                }
                let a_rows = a.len() / k;
                if i < a_rows {
                    acc[bi][i * cols + j] += a[i * k + s] as i32 * w[j * k + s] as i32;
                }
                last_mac = last_mac.max(cycle);
            }
        }
    }
    (acc, last_mac + 2)
}
