use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::buffers::{has_pingpong_conflict, Access, BufferId, BufferModel};
use super::config::{LayerClass, PeaConfig};
use super::controller::ControllerRegs;
use super::conv::conv_unit_execute;
use super::schedule::{decompose, pea_cycles, pea_execute, BlockSchedule};
use crate::deploy::{leaky_shift, IntOutput, QDemodLinear, QLinear, QuantizedGraph};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Control,
    Dma,
    Pea,
    Conv,
    Output,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Control => "control",
            Stage::Dma => "dma",
            Stage::Pea => "pea",
            Stage::Conv => "conv",
            Stage::Output => "output",
        }
    }
}

/// A busy interval of one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub stage: Stage,
    pub start: u64,
    pub end: u64,
    pub pass: usize,
    pub macs: u64,
    pub label: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub cycle: u64,
    pub stage: Stage,
    pub event: &'static str,
    pub pass: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub intervals: Vec<Interval>,
    pub handshakes: Vec<TraceEvent>,
    pub accesses: Vec<Access>,
    pub frames: usize,
    pub symbols_per_frame: usize,
    pub samples_per_symbol: usize,
    pub clock_hz: f64,
}

impl Trace {
    /// Begin/end events of every interval plus controller handshakes, sorted
    /// by cycle (ties keep stage order).
    pub fn events(&self) -> Vec<TraceEvent> {
        let mut ev = Vec::with_capacity(2 * self.intervals.len() + self.handshakes.len());
        for iv in &self.intervals {
            ev.push(TraceEvent { cycle: iv.start, stage: iv.stage, event: begin_name(iv.label), pass: iv.pass });
            ev.push(TraceEvent { cycle: iv.end, stage: iv.stage, event: end_name(iv.label), pass: iv.pass });
        }
        ev.extend_from_slice(&self.handshakes);
        ev.sort_by_key(|e| (e.cycle, e.stage, e.pass));
        ev
    }

    pub fn has_pingpong_conflict(&self) -> bool {
        has_pingpong_conflict(&self.accesses)
    }
}

fn begin_name(label: &'static str) -> &'static str {
    match label {
        "reg_config" => "reg_config_begin",
        "load" => "load_begin",
        "dft_linear" => "dft_linear_begin",
        "demod_linear" => "demod_linear_begin",
        "dft_conv" => "dft_conv_begin",
        "demod_conv" => "demod_conv_begin",
        _ => "begin",
    }
}

fn end_name(label: &'static str) -> &'static str {
    match label {
        "reg_config" => "reg_config_end",
        "load" => "load_end",
        "dft_linear" => "dft_linear_end",
        "demod_linear" => "demod_linear_end",
        "dft_conv" => "dft_conv_end",
        "demod_conv" => "demod_conv_end",
        _ => "end",
    }
}

/// Aggregate timing of a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CycleReport {
    pub pea_cycles: u64,
    pub conv_cycles: u64,
    pub dma_cycles: u64,
    pub control_cycles: u64,
    /// Critical path of the whole run.
    pub total_cycles: u64,
    pub frames: usize,
    pub symbols: usize,
    pub frame_cycles: f64,
    pub frame_latency_us: f64,
    pub symbol_latency_us: f64,
    /// Processed samples per second (`S` samples per symbol).
    pub rate_sps: f64,
    pub macs: u64,
    /// Two operations per MAC.
    pub gops: f64,
}

pub fn latency_report(trace: &Trace) -> Result<CycleReport> {
    if trace.intervals.is_empty() || trace.frames == 0 {
        return Err(Error::EmptyTrace);
    }
    let busy = |s: Stage| -> u64 {
        trace.intervals.iter().filter(|i| i.stage == s).map(|i| i.end - i.start).sum()
    };
    let total = trace.intervals.iter().map(|i| i.end).max().unwrap_or(0);
    let macs: u64 = trace.intervals.iter().map(|i| i.macs).sum();
    let symbols = trace.frames * trace.symbols_per_frame;
    let seconds = total as f64 / trace.clock_hz;
    let symbol_s = seconds / symbols.max(1) as f64;
    Ok(CycleReport {
        pea_cycles: busy(Stage::Pea),
        conv_cycles: busy(Stage::Conv),
        dma_cycles: busy(Stage::Dma),
        control_cycles: busy(Stage::Control),
        total_cycles: total,
        frames: trace.frames,
        symbols,
        frame_cycles: total as f64 / trace.frames as f64,
        frame_latency_us: seconds / trace.frames as f64 * 1e6,
        symbol_latency_us: symbol_s * 1e6,
        rate_sps: if symbol_s > 0.0 { trace.samples_per_symbol as f64 / symbol_s } else { 0.0 },
        macs,
        gops: if seconds > 0.0 { 2.0 * macs as f64 / seconds / 1e9 } else { 0.0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelinePolicy {
    /// Stream both linears of a stage in one PEA run.
    pub merge_linears: bool,
    /// Overlap consecutive blocks through the dual result registers.
    pub data_merge: bool,
}

impl Default for PipelinePolicy {
    fn default() -> Self {
        Self {
            merge_linears: true,
            data_merge: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub output: IntOutput,
    pub report: CycleReport,
    pub trace: Trace,
    pub regs: ControllerRegs,
}

/// PEA cycles of one stage made of `layers`, honoring the policy.
pub fn stage_pea_cycles(scheds: &[&BlockSchedule], pea: &PeaConfig, policy: &PipelinePolicy) -> u64 {
    if policy.merge_linears {
        pea_cycles(scheds, pea, policy.data_merge)
    } else {
        scheds.iter().map(|s| pea_cycles(&[s], pea, policy.data_merge)).sum()
    }
}

struct Sched {
    intervals: Vec<Interval>,
    handshakes: Vec<TraceEvent>,
    accesses: Vec<Access>,
    dma_free: u64,
    pea_free: u64,
    conv_free: u64,
    ctrl_free: u64,
    /// Conv end per ping-pong pass index.
    pp_conv_end: Vec<u64>,
}

impl Sched {
    fn run(&mut self, stage: Stage, ready: u64, dur: u64, pass: usize, macs: u64, label: &'static str) -> (u64, u64) {
        let free = match stage {
            Stage::Dma => &mut self.dma_free,
            Stage::Pea => &mut self.pea_free,
            Stage::Conv => &mut self.conv_free,
            Stage::Control | Stage::Output => &mut self.ctrl_free,
        };
        let start = ready.max(*free);
        let end = start + dur;
        *free = end;
        if dur > 0 || stage != Stage::Control {
            self.intervals.push(Interval { stage, start, end, pass, macs, label });
        }
        (start, end)
    }

    fn handshake(&mut self, cycle: u64, stage: Stage, event: &'static str, pass: usize) {
        self.handshakes.push(TraceEvent { cycle, stage, event, pass });
    }

    fn pp_free(&self, idx: usize) -> u64 {
        if idx >= 2 {
            self.pp_conv_end[idx - 2]
        } else {
            0
        }
    }
}

/// Requantized PEA output for one linear layer on rows `a`.
fn pea_layer(l: &QLinear, a: &[i8], rows: usize, pea: &PeaConfig, class: LayerClass, regs: &ControllerRegs, sat: &mut u64) -> Result<(Vec<i8>, BlockSchedule)> {
    let sched = decompose((rows, l.in_dim), (l.in_dim, l.out_dim), pea, class)?;
    let (acc, _) = pea_execute(&sched, a, &l.weight, pea, true)?;
    let rq = regs.requant(&l.name)?;
    let mut out = Vec::with_capacity(acc.len());
    for (i, &v) in acc.iter().enumerate() {
        let (q, s) = rq.apply(v + l.bias[i % l.out_dim] as i32);
        *sat += u64::from(s);
        out.push(q);
    }
    Ok((out, sched))
}

/// Event-driven run of the receiver graph over `frames` frames of quantized
/// rows `[frames·2F, S]`: register configuration, input DMA, PEA linears,
/// Conv1D mixes and output handoff, with ping-pong buffering between PEA and
/// Conv1D. Function is computed block by block on the PEA model.
pub fn run_pipeline(
    g: &QuantizedGraph,
    q_in: &[i8],
    frames: usize,
    pea: &PeaConfig,
    buffers: &BufferModel,
    policy: &PipelinePolicy,
) -> Result<PipelineRun> {
    let s = g.sym_len();
    if frames == 0 || q_in.len() % (2 * s * frames) != 0 {
        return Err(Error::Shape(format!(
            "pipeline input of {} codes is not {frames} frames of rows of {s}",
            q_in.len()
        )));
    }
    let syms = q_in.len() / (2 * s * frames);
    pea.validate(syms)?;
    let mut regs = ControllerRegs::from_graph(g, policy.merge_linears);
    if !regs.covers(g) {
        return Err(Error::Schedule("register file does not cover every layer".into()));
    }
    let fpp = pea.frames_per_dft_pass(syms);
    let group = if g.demod.is_some() { pea.rows } else { frames };
    let frame_codes = 2 * syms * s;
    let poll = pea.poll_cycles;

    let mut st = Sched {
        intervals: Vec::new(),
        handshakes: Vec::new(),
        accesses: Vec::new(),
        dma_free: 0,
        pea_free: 0,
        conv_free: 0,
        ctrl_free: 0,
        pp_conv_end: Vec::new(),
    };
    let mut sat = 0u64;
    let mut dft_out = vec![0i8; q_in.len()];
    let mut scores = g.demod.as_ref().map(|d| Vec::with_capacity(frames * 2 * d.dm));
    let mut staging_free = 0u64;
    let mut buf3_free = 0u64;
    let mut pp_idx = 0usize;

    for g0 in (0..frames).step_by(group) {
        let gf = group.min(frames - g0);
        let mut features_ready = 0u64;
        for p0 in (g0..g0 + gf).step_by(fpp) {
            let pf = fpp.min(g0 + gf - p0);
            let rows = pf * 2 * syms;
            let a = &q_in[p0 * frame_codes..(p0 + pf) * frame_codes];
            // Register configuration and start.
            let (c0, c1) = st.run(Stage::Control, staging_free, pea.reg_config_cycles, pp_idx, 0, "reg_config");
            st.handshake(c0, Stage::Control, "start", pp_idx);
            // Input load into the staging buffer.
            let bytes = (rows * s) as u64;
            let (_, d1) = st.run(Stage::Dma, c1, bytes.div_ceil(pea.dma_bytes_per_cycle as u64), pp_idx, 0, "load");
            // Linear stage on the PEA, writing [u1..u4] to a ping-pong buffer.
            let buf = BufferId::ping_pong(pp_idx);
            buffers.check(buf, 2 * rows * s)?;
            let (a_r, sr) = pea_layer(&g.dft.lin_r, a, rows, pea, LayerClass::Dft, &regs, &mut sat)?;
            let (a_i, si) = pea_layer(&g.dft.lin_i, a, rows, pea, LayerClass::Dft, &regs, &mut sat)?;
            let dur = stage_pea_cycles(&[&sr, &si], pea, policy);
            let ready = d1.max(st.pp_free(pp_idx));
            let (p_start, p_end) = st.run(Stage::Pea, ready, dur, pp_idx, sr.macs() + si.macs(), "dft_linear");
            st.accesses.push(Access { buffer: buf, start: p_start, end: p_end, write: true, pass: pp_idx });
            st.handshake(p_end + poll, Stage::Pea, "array_done", pp_idx);
            staging_free = p_end + poll;
            // Conv1D, F lanes, one position per cycle; writes buf3.
            let lanes: Vec<Vec<i8>> = (0..pf * syms)
                .map(|k| {
                    let mut x = Vec::with_capacity(4 * s);
                    x.extend_from_slice(&a_r[2 * k * s..(2 * k + 2) * s]);
                    x.extend_from_slice(&a_i[2 * k * s..(2 * k + 2) * s]);
                    x
                })
                .collect();
            let (y, csat, len_cycles) = conv_unit_execute(&lanes, s, &g.dft.mix)?;
            sat += csat;
            let conv_dur = len_cycles * pf as u64;
            let conv_macs = (8 * s * syms * pf) as u64;
            let (v0, v1) = st.run(Stage::Conv, (p_end + poll).max(buf3_free), conv_dur, pp_idx, conv_macs, "dft_conv");
            st.accesses.push(Access { buffer: buf, start: v0, end: v1, write: false, pass: pp_idx });
            st.accesses.push(Access { buffer: BufferId::Buf3, start: v0, end: v1, write: true, pass: pp_idx });
            st.handshake(v1 + poll, Stage::Conv, "conv_done", pp_idx);
            st.pp_conv_end.push(v1 + poll);
            features_ready = v1 + poll;
            let out = &mut dft_out[p0 * frame_codes..(p0 + pf) * frame_codes];
            for (k, yk) in y.iter().enumerate() {
                out[2 * k * s..(2 * k + 2) * s].copy_from_slice(yk);
            }
            if g.demod.is_none() {
                st.handshake(v1 + poll, Stage::Output, "recv_done", pp_idx);
            }
            pp_idx += 1;
        }

        let Some(d) = &g.demod else { continue };
        let (len, dm) = (d.in_len, d.dm);
        buffers.check(BufferId::Buf3, gf * frame_codes)?;
        let x = crate::deploy::frame_channels_i8(&dft_out[g0 * frame_codes..(g0 + gf) * frame_codes], gf, s);
        let buf = BufferId::ping_pong(pp_idx);
        buffers.check(buf, gf * 2 * dm)?;
        let (h, scheds): (Vec<Vec<i8>>, Vec<BlockSchedule>) = match &d.linear {
            QDemodLinear::Joint(l) => {
                let (h, sc) = pea_layer(l, &x, gf, pea, LayerClass::Demod, &regs, &mut sat)?;
                (h.chunks_exact(2 * dm).map(|c| c.to_vec()).collect(), vec![sc])
            }
            QDemodLinear::Split(lr, li) => {
                let mut re = Vec::with_capacity(gf * len);
                let mut im = Vec::with_capacity(gf * len);
                for f in x.chunks_exact(2 * len) {
                    re.extend_from_slice(&f[..len]);
                    im.extend_from_slice(&f[len..]);
                }
                let (hr, s1) = pea_layer(lr, &re, gf, pea, LayerClass::Demod, &regs, &mut sat)?;
                let (hi, s2) = pea_layer(li, &im, gf, pea, LayerClass::Demod, &regs, &mut sat)?;
                let h = hr
                    .chunks_exact(dm)
                    .zip(hi.chunks_exact(dm))
                    .map(|(a, b)| [a, b].concat())
                    .collect();
                (h, vec![s1, s2])
            }
        };
        if scheds.iter().any(|s| s.blocks.iter().any(|b| !b.accumulate.is_final())) {
            buffers.check(BufferId::Buf4, pea.rows * pea.cols * 4)?;
        }
        let refs: Vec<&BlockSchedule> = scheds.iter().collect();
        let dur = stage_pea_cycles(&refs, pea, policy);
        let macs: u64 = scheds.iter().map(|s| s.macs()).sum();
        let ready = features_ready.max(st.pp_free(pp_idx));
        let (_, c1) = st.run(Stage::Control, ready, pea.reg_config_cycles, pp_idx, 0, "reg_config");
        let (p_start, p_end) = st.run(Stage::Pea, c1, dur, pp_idx, macs, "demod_linear");
        st.accesses.push(Access { buffer: BufferId::Buf3, start: p_start, end: p_end, write: false, pass: pp_idx });
        st.accesses.push(Access { buffer: buf, start: p_start, end: p_end, write: true, pass: pp_idx });
        st.handshake(p_end + poll, Stage::Pea, "array_done", pp_idx);
        buf3_free = p_end + poll;
        // Demod Conv1D: one lane, Dm positions per frame.
        let lanes: Vec<Vec<i8>> = h
            .iter()
            .map(|hf| {
                let mut x = hf.clone();
                x.extend(hf.iter().map(|&q| leaky_shift(q)));
                x
            })
            .collect();
        let (z, csat, len_cycles) = conv_unit_execute(&lanes, dm, &d.mix)?;
        sat += csat;
        let (v0, v1) = st.run(Stage::Conv, p_end + poll, len_cycles * gf as u64, pp_idx, (8 * dm * gf) as u64, "demod_conv");
        st.accesses.push(Access { buffer: buf, start: v0, end: v1, write: false, pass: pp_idx });
        st.handshake(v1 + poll, Stage::Conv, "conv_done", pp_idx);
        st.handshake(v1 + poll, Stage::Output, "recv_done", pp_idx);
        st.pp_conv_end.push(v1 + poll);
        let sc = scores.as_mut().expect("demod present");
        for zf in &z {
            for i in 0..dm {
                sc.push(zf[i]);
                sc.push(zf[dm + i]);
            }
        }
        pp_idx += 1;
    }

    regs.start = true;
    regs.array_done = true;
    regs.conv_done = true;
    regs.recv_done = true;
    let trace = Trace {
        intervals: st.intervals,
        handshakes: st.handshakes,
        accesses: st.accesses,
        frames,
        symbols_per_frame: syms,
        samples_per_symbol: s,
        clock_hz: pea.clock_hz,
    };
    let report = latency_report(&trace)?;
    Ok(PipelineRun {
        output: IntOutput {
            dft_out,
            scores,
            saturations: sat,
        },
        report,
        trace,
        regs,
    })
}
