use alloc::vec::Vec;

use crate::{Error, Result};

/// On-chip buffers and their capacities in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BufferModel {
    /// Ping-pong pair between the PEA and the Conv1D unit.
    pub buf1: usize,
    pub buf2: usize,
    /// DFT-Net frame output.
    pub buf3: usize,
    /// 32-bit partial sums.
    pub buf4: usize,
}

impl Default for BufferModel {
    fn default() -> Self {
        Self {
            buf1: 64 * 1024,
            buf2: 64 * 1024,
            buf3: 64 * 1024,
            buf4: 4 * 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BufferId {
    Buf1,
    Buf2,
    Buf3,
    Buf4,
}

impl BufferId {
    pub fn name(self) -> &'static str {
        match self {
            BufferId::Buf1 => "buf1",
            BufferId::Buf2 => "buf2",
            BufferId::Buf3 => "buf3",
            BufferId::Buf4 => "buf4",
        }
    }

    /// Ping-pong buffer used by PEA pass `index`.
    pub fn ping_pong(index: usize) -> Self {
        if index % 2 == 0 {
            BufferId::Buf1
        } else {
            BufferId::Buf2
        }
    }
}

impl BufferModel {
    pub fn capacity(&self, id: BufferId) -> usize {
        match id {
            BufferId::Buf1 => self.buf1,
            BufferId::Buf2 => self.buf2,
            BufferId::Buf3 => self.buf3,
            BufferId::Buf4 => self.buf4,
        }
    }

    pub fn check(&self, id: BufferId, needed: usize) -> Result<()> {
        let capacity = self.capacity(id);
        if needed > capacity {
            return Err(Error::BufferOverflow {
                buffer: id.name(),
                needed,
                capacity,
            });
        }
        Ok(())
    }
}

/// A half-open busy interval during which a stage writes or reads a buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub buffer: BufferId,
    pub start: u64,
    pub end: u64,
    pub write: bool,
    pub pass: usize,
}

/// True if some write to a ping-pong buffer overlaps a read of the same
/// buffer belonging to a different pass.
pub fn has_pingpong_conflict(accesses: &[Access]) -> bool {
    let pp: Vec<&Access> = accesses
        .iter()
        .filter(|a| matches!(a.buffer, BufferId::Buf1 | BufferId::Buf2))
        .collect();
    for w in pp.iter().filter(|a| a.write) {
        for r in pp.iter().filter(|a| !a.write) {
            if w.buffer == r.buffer && w.pass != r.pass && w.start < r.end && r.start < w.end {
                return true;
            }
        }
    }
    false
}
