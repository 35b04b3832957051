//! Cycle-level model of the dual-driven accelerator: an output-stationary
//! PE array for the linears, a Conv1D unit for the 4 → 2 mixes, four on-chip
//! buffers and a register-driven controller.

mod buffers;
mod config;
mod controller;
mod conv;
mod pipeline;
mod schedule;
mod table;

pub use buffers::{has_pingpong_conflict, Access, BufferId, BufferModel};
pub use config::{LayerClass, PeaConfig};
pub use controller::{ControllerRegs, FlowMode};
pub use conv::conv_unit_execute;
pub use pipeline::{
    latency_report, run_pipeline, stage_pea_cycles, CycleReport, Interval, PipelinePolicy, PipelineRun, Stage, Trace,
    TraceEvent,
};
pub use schedule::{decompose, drain, pea_cycles, pea_execute, systolic_emulate, Accumulate, BasicBlock, BlockSchedule};
pub use table::{layer_cycle_table, LayerCycles};
