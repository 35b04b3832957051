use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("input shape error: {0}")]
    Shape(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("batch norm in train mode needs at least two samples per channel")]
    DegenerateVariance,
    #[error("training diverged at step {step}: loss = {loss}")]
    Divergence { step: usize, loss: f64 },
    #[error("system variant is missing its {0}")]
    MissingNet(&'static str),
    #[error("int16 bias overflow in layer `{layer}` (value {value})")]
    BiasOverflow { layer: String, value: f64 },
    #[error("requantization ratio {0} is not representable")]
    RequantRange(f64),
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("buffer `{buffer}` overflow: need {needed} bytes, capacity {capacity}")]
    BufferOverflow {
        buffer: &'static str,
        needed: usize,
        capacity: usize,
    },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("parameter bundle error: {0}")]
    Bundle(String),
}
