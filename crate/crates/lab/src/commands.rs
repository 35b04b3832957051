//! The work behind each CLI subcommand, usable from tests.

use std::fs;
use std::path::{Path, PathBuf};

use ofdm_nn_core::ddna::{
    layer_cycle_table, run_pipeline, CycleReport, LayerCycles, PipelinePolicy,
};
use ofdm_nn_core::deploy::{
    build_quantized_graph, calibration_rows, fake_quant_forward, FusedDftNet, FusedReceiver,
    QuantizedGraph,
};
use ofdm_nn_core::models::layout::rows_to_frame_channels;
use ofdm_nn_core::models::{
    count_complexity, DemodVariant, Direction, DftNetParams, SystemVariant, Trainer, VariantKind,
};
use ofdm_nn_core::ofdm::FrameConfig;
use ofdm_nn_core::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::bundle::{
    is_bundle, load_checkpoint, load_model, load_quantized, save_checkpoint, save_model,
    save_quantized,
};
use crate::config::ExperimentConfig;
use crate::csvio::{read_csv, write_csv};
use crate::error::{io_err, LabError, LabResult};
use crate::report::{render_report, BER_HEADER};
use crate::sweep::{run_sweep, sort_records, Arithmetic, BerRecord, Int8Engine, Link};

const CALIB_TAG: u64 = 0xca1b_0001;
const CHECK_TAG: u64 = 0xc4ec_0001;
const SIM_TAG: u64 = 0x5100_0001;

pub const MODEL_DIR: &str = "model";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const QUANT_DIR: &str = "quantized";

fn write_json<T: Serialize>(path: &Path, value: &T) -> LabResult<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).map_err(io_err(path))
}

fn ensure_dir(dir: &Path) -> LabResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValRow {
    pub step: usize,
    pub val_ber: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub variant: SystemVariant,
    pub losses: Vec<f64>,
    pub stopped_early: bool,
    pub model_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrainOptions {
    /// Continue from `out/checkpoint` when present.
    pub resume: bool,
    /// Write a checkpoint every N steps (0 = only at the end).
    pub checkpoint_every: usize,
    /// Stop this invocation after at most N new steps.
    pub max_steps: Option<usize>,
}

/// Trains the configured variant, writing `model/`, `checkpoint/`,
/// `loss.csv` and `val.csv` under `out`.
pub fn train(cfg: &ExperimentConfig, out: &Path, opts: TrainOptions) -> LabResult<TrainOutcome> {
    cfg.validate()?;
    if cfg.variant == VariantKind::Conventional {
        return Err(LabError::Config("the conventional variant has nothing to train".into()));
    }
    ensure_dir(out)?;
    let hash = cfg.hash();
    let ckpt = out.join(CHECKPOINT_DIR);
    let mut t = if opts.resume && is_bundle(&ckpt) {
        let (m, t) = load_checkpoint(&ckpt, cfg.train.clone())?;
        if m.variant != cfg.variant || m.frame != cfg.frame || m.demod_variant != cfg.demod_variant {
            return Err(LabError::Config(format!(
                "checkpoint holds a {} model that does not match the configured {} link",
                m.variant.name(),
                cfg.variant.name()
            )));
        }
        if m.config_hash != hash {
            log::warn!("checkpoint config {} differs from {hash}; continuing", m.config_hash);
        }
        log::info!("resuming at step {}", t.step);
        t
    } else {
        let v = SystemVariant::new(cfg.variant, cfg.frame.clone(), cfg.demod()?, cfg.train.seed);
        Trainer::new(v, cfg.train.clone())?
    };
    let stop_at = opts.max_steps.map_or(usize::MAX, |n| t.step.saturating_add(n));
    while !t.finished() && t.step < stop_at {
        let loss = t.advance()?;
        if t.step % 100 == 0 {
            log::info!("step {} loss {loss:.5}", t.step);
        }
        if opts.checkpoint_every > 0 && t.step % opts.checkpoint_every == 0 {
            save_checkpoint(&ckpt, &t, &hash)?;
        }
    }
    save_checkpoint(&ckpt, &t, &hash)?;
    let variant = t.deployable()?;
    let model_dir = out.join(MODEL_DIR);
    save_model(&model_dir, &variant, &hash)?;
    let rows: Vec<LossRow> = t
        .report
        .losses
        .iter()
        .enumerate()
        .map(|(i, &loss)| LossRow {
            step: i,
            loss,
            lr: cfg.train.lr_at(i),
        })
        .collect();
    write_csv(&out.join("loss.csv"), &rows, &["step", "loss", "lr"])?;
    let val: Vec<ValRow> = t
        .report
        .val_ber
        .iter()
        .map(|&(step, val_ber)| ValRow { step, val_ber })
        .collect();
    write_csv(&out.join("val.csv"), &val, &["step", "val_ber"])?;
    Ok(TrainOutcome {
        variant,
        losses: t.report.losses.clone(),
        stopped_early: t.report.stopped_early,
        model_dir,
    })
}

/// Builds the link under test. Learned variants need a bundle: a model
/// bundle for `fp`, a quantized bundle for `int8`.
pub fn build_link(
    cfg: &ExperimentConfig,
    bundle: Option<&Path>,
    arithmetic: Arithmetic,
    engine: Int8Engine,
) -> LabResult<Link> {
    if cfg.variant == VariantKind::Conventional {
        let v = SystemVariant::conventional(cfg.frame.clone());
        return match arithmetic {
            Arithmetic::Fp => Ok(Link::float(v)),
            Arithmetic::Fixed16 => Link::fixed16(v),
            Arithmetic::Int8 => Err(LabError::Config(
                "int8 arithmetic needs a learned receiver".into(),
            )),
        };
    }
    let dir = bundle.ok_or(LabError::MissingBundle(cfg.variant.name()))?;
    if !is_bundle(dir) {
        return Err(LabError::Bundle {
            path: dir.to_path_buf(),
            msg: "no manifest.json found".into(),
        });
    }
    let link = match arithmetic {
        Arithmetic::Fp => Link::float(load_model(dir)?.1),
        Arithmetic::Fixed16 => {
            return Err(LabError::Config(
                "fixed16 arithmetic applies to the conventional receiver only".into(),
            ))
        }
        Arithmetic::Int8 => {
            let (_, v, g) = load_quantized(dir)?;
            Link::int8(v, g, engine)?
        }
    };
    if link.variant.kind != cfg.variant || link.variant.cfg != cfg.frame {
        return Err(LabError::Config(format!(
            "bundle holds a {} model that does not match the configured {} link",
            link.variant.kind.name(),
            cfg.variant.name()
        )));
    }
    Ok(link)
}

/// File name of a sweep's output.
pub fn ber_file_name(link: &Link) -> String {
    format!(
        "ber_{}_m{}_{}.csv",
        link.variant.kind.name(),
        link.variant.cfg.mod_order_bits,
        link.arithmetic
    )
}

pub fn ber_sweep(
    cfg: &ExperimentConfig,
    bundle: Option<&Path>,
    arithmetic: Arithmetic,
    engine: Int8Engine,
    out: &Path,
    workers: usize,
) -> LabResult<(PathBuf, Vec<BerRecord>)> {
    cfg.validate()?;
    let link = build_link(cfg, bundle, arithmetic, engine)?;
    let records = run_sweep(&link, &cfg.sweep, cfg.seed, workers, &cfg.hash())?;
    let path = out.join(ber_file_name(&link));
    write_csv(&path, &records, BER_HEADER)?;
    Ok((path, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterRow {
    pub layer: String,
    pub m: i64,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantReport {
    pub config_hash: String,
    pub variant: String,
    pub demod_variant: u8,
    /// Largest |fused − unfused| over DFT outputs and Demod logits.
    pub fusion_max_abs_error: f64,
    pub calib_frames: usize,
    /// Integer path equals the fake-quant reference on every code.
    pub int_matches_reference: bool,
    pub check_frames: usize,
    pub saturations: u64,
    pub int8_weight_bytes: usize,
    pub f32_weight_bytes: usize,
    pub byte_ratio: f64,
    pub registers: Vec<RegisterRow>,
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Fuses, calibrates and quantizes `v`, then checks the integer path.
pub fn quantize_variant(cfg: &ExperimentConfig, v: &SystemVariant) -> LabResult<(QuantizedGraph, QuantReport)> {
    let q = &cfg.quant;
    let rows = calibration_rows(v, q.calib_frames, q.calib_snr_db, derive_seed(cfg.seed, CALIB_TAG))?;
    let fused = FusedReceiver::from_variant(v)?;
    let acts = fused.forward(&rows, q.calib_frames)?;
    let feat = v.rx_net()?.forward(&rows)?;
    let mut err = max_abs(feat.data(), acts.dft_out.data());
    if let (Some(demod), Some(logits)) = (v.demod_net.as_ref(), acts.logits.as_ref()) {
        let z = demod.logits(&rows_to_frame_channels(&feat, q.calib_frames)?)?;
        let dm = v.cfg.bits_per_frame();
        let fused_z: Vec<f64> = logits
            .data()
            .chunks_exact(2 * dm)
            .flat_map(|f| (0..dm).flat_map(move |d| [f[d], f[dm + d]]))
            .collect();
        err = err.max(max_abs(z.data(), &fused_z));
    }
    let g = build_quantized_graph(&fused, &acts)?;

    let check = calibration_rows(v, q.check_frames, q.calib_snr_db, derive_seed(cfg.seed, CHECK_TAG))?;
    let codes = g.quantize_input(&check);
    let a = g.int_forward(&codes, q.check_frames)?;
    let b = fake_quant_forward(&g, &codes, q.check_frames)?;
    let f32_bytes = g.f32_weight_bytes();
    let report = QuantReport {
        config_hash: cfg.hash(),
        variant: v.kind.name().into(),
        demod_variant: v.demod_variant().map_or(0, |d| d.index()),
        fusion_max_abs_error: err,
        calib_frames: q.calib_frames,
        int_matches_reference: a.dft_out == b.dft_out && a.scores == b.scores,
        check_frames: q.check_frames,
        saturations: a.saturations,
        int8_weight_bytes: g.int8_weight_bytes(),
        f32_weight_bytes: f32_bytes,
        byte_ratio: g.int8_weight_bytes() as f64 / f32_bytes as f64,
        registers: g
            .registers()
            .into_iter()
            .map(|(layer, r)| RegisterRow { layer, m: r.m.into(), n: r.n })
            .collect(),
    };
    Ok((g, report))
}

/// Quantizes the model in `bundle`, writing `quantized/` and
/// `quant_report.json` under `out`.
pub fn quantize(cfg: &ExperimentConfig, bundle: &Path, out: &Path) -> LabResult<QuantReport> {
    cfg.validate()?;
    let (_, v) = load_model(bundle)?;
    if v.kind == VariantKind::Conventional {
        return Err(LabError::Config("the conventional receiver has no network to quantize".into()));
    }
    let (g, report) = quantize_variant(cfg, &v)?;
    ensure_dir(out)?;
    save_quantized(&out.join(QUANT_DIR), &v, &g, &report.config_hash)?;
    write_json(&out.join("quant_report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub cycle: u64,
    pub stage: String,
    pub event: String,
    pub pass: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub config_hash: String,
    pub flow: String,
    pub frames: usize,
    pub snr_db: f64,
    /// Accelerator outputs equal the reference integer forward.
    pub bit_exact: bool,
    pub pingpong_conflict: bool,
    pub report: CycleReport,
}

/// DFT-only graph from the analytic DFT-Net, calibrated on conventional
/// frames.
fn analytic_dft_graph(cfg: &ExperimentConfig) -> LabResult<(SystemVariant, QuantizedGraph)> {
    let v = SystemVariant::conventional(cfg.frame.clone());
    let fused = FusedReceiver {
        dft: FusedDftNet::from_params(&DftNetParams::analytic(&cfg.frame, Direction::Forward))?,
        demod: None,
    };
    let q = &cfg.quant;
    let rows = calibration_rows(&v, q.calib_frames, q.calib_snr_db, derive_seed(cfg.seed, CALIB_TAG))?;
    let acts = fused.forward(&rows, q.calib_frames)?;
    Ok((v, build_quantized_graph(&fused, &acts)?))
}

/// Runs `frames` frames at `snr_db` through the accelerator model and writes
/// `layers.csv`, `cycle_report.csv`, `trace.csv` and `sim_report.json`.
/// Without a bundle the analytic DFT-Net is simulated on its own.
pub fn sim_ddna(
    cfg: &ExperimentConfig,
    bundle: Option<&Path>,
    frames: usize,
    snr_db: f64,
    out: &Path,
) -> LabResult<SimSummary> {
    cfg.validate()?;
    if frames == 0 {
        return Err(LabError::Config("sim-ddna needs at least one frame".into()));
    }
    let (v, g) = match bundle {
        Some(dir) => {
            let (_, v, g) = load_quantized(dir)?;
            (v, g)
        }
        None => analytic_dft_graph(cfg)?,
    };
    let rows = calibration_rows(&v, frames, [snr_db, snr_db], derive_seed(cfg.seed, SIM_TAG))?;
    let codes = g.quantize_input(&rows);
    let run = run_pipeline(&g, &codes, frames, &cfg.pea, &cfg.buffers, &PipelinePolicy::default())?;
    let reference = g.int_forward(&codes, frames)?;
    let demod = if g.demod.is_some() { v.demod_variant() } else { None };
    let table: Vec<LayerCycles> = layer_cycle_table(&v.cfg, demod, &cfg.pea)?;

    ensure_dir(out)?;
    write_csv(
        &out.join("layers.csv"),
        &table,
        LAYER_HEADER,
    )?;
    write_csv(&out.join("cycle_report.csv"), &[run.report], &[])?;
    let trace: Vec<TraceRow> = run
        .trace
        .events()
        .into_iter()
        .map(|e| TraceRow {
            cycle: e.cycle,
            stage: e.stage.name().into(),
            event: e.event.into(),
            pass: e.pass,
        })
        .collect();
    write_csv(&out.join("trace.csv"), &trace, &["cycle", "stage", "event", "pass"])?;
    let summary = SimSummary {
        config_hash: cfg.hash(),
        flow: if g.demod.is_some() { "dft+demod" } else { "dft" }.into(),
        frames,
        snr_db,
        bit_exact: run.output.dft_out == reference.dft_out && run.output.scores == reference.scores,
        pingpong_conflict: run.trace.has_pingpong_conflict(),
        report: run.report,
    };
    write_json(&out.join("sim_report.json"), &summary)?;
    Ok(summary)
}

/// CSV files among `inputs`: files as given, directories expanded to their
/// `ber*.csv` entries. Sorted for a stable merge order.
fn collect_inputs(inputs: &[PathBuf]) -> LabResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            for e in fs::read_dir(p).map_err(io_err(p))? {
                let path = e.map_err(io_err(p))?.path();
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
                if name.starts_with("ber") && name.ends_with(".csv") && path.is_file() {
                    files.push(path);
                }
            }
        } else {
            files.push(p.clone());
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

/// One row of the parameter / MAC summary for a receiver configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub modulation: usize,
    pub demod_variant: u8,
    pub weights: usize,
    pub params_unfused: usize,
    pub params_fused: usize,
    pub macs: usize,
}

/// Receiver complexity (DFT-Net plus Demod-Net) for BPSK, QPSK and 16-QAM
/// with both Demod-Net variants, on `cfg`'s frame layout.
pub fn complexity_table(cfg: &ExperimentConfig) -> Vec<ComplexityRow> {
    let mut rows = Vec::new();
    for d in [DemodVariant::Joint, DemodVariant::Split] {
        for m in [1, 2, 4] {
            let frame = FrameConfig {
                mod_order_bits: m,
                ..cfg.frame.clone()
            };
            let c = count_complexity(&frame, d);
            rows.push(ComplexityRow {
                modulation: m,
                demod_variant: d.index(),
                weights: c.weights,
                params_unfused: c.params_unfused,
                params_fused: c.params_fused,
                macs: c.macs,
            });
        }
    }
    rows
}

/// Per-layer cycles of the DFT-Net and both Demod-Nets on `cfg.pea`.
pub fn layer_table(cfg: &ExperimentConfig) -> LabResult<Vec<LayerCycles>> {
    let mut rows = layer_cycle_table(&cfg.frame, Some(DemodVariant::Joint), &cfg.pea)?;
    for r in layer_cycle_table(&cfg.frame, Some(DemodVariant::Split), &cfg.pea)? {
        if !rows.contains(&r) {
            rows.push(r);
        }
    }
    Ok(rows)
}

const LAYER_HEADER: &[&str] = &["model", "layer", "in_ch", "in_len", "out_ch", "out_len", "macs", "cycles"];

/// Merges BER CSVs into `ber_summary.csv`, renders `report.md` and writes
/// the complexity (`complexity.csv`) and cycle (`layer_table.csv`) tables
/// for `cfg`.
pub fn report(cfg: &ExperimentConfig, inputs: &[PathBuf], out: &Path) -> LabResult<Vec<BerRecord>> {
    cfg.validate()?;
    let mut records = Vec::new();
    for f in collect_inputs(inputs)? {
        records.extend(read_csv::<BerRecord>(&f)?);
    }
    sort_records(&mut records);
    records.dedup();
    ensure_dir(out)?;
    write_csv(&out.join("ber_summary.csv"), &records, BER_HEADER)?;
    write_csv(&out.join("complexity.csv"), &complexity_table(cfg), &[])?;
    write_csv(&out.join("layer_table.csv"), &layer_table(cfg)?, LAYER_HEADER)?;
    let md = render_report(&records);
    let path = out.join("report.md");
    fs::write(&path, md).map_err(io_err(&path))?;
    Ok(records)
}
