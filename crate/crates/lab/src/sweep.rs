//! Monte-Carlo BER sweeps with an error-count stopping rule.

use std::fmt;

use ofdm_nn_core::ddna::{run_pipeline, BufferModel, PeaConfig, PipelinePolicy};
use ofdm_nn_core::deploy::QuantizedGraph;
use ofdm_nn_core::models::layout::samples_to_rows;
use ofdm_nn_core::models::{hard_decisions, SystemVariant, VariantKind};
use ofdm_nn_core::nn::RealTensor;
use ofdm_nn_core::ofdm::{awgn_with, conventional_rx, ComplexVec, FftEngine};
use ofdm_nn_core::rng::{derive_seed, SimRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SweepConfig;
use crate::error::{LabError, LabResult};
use crate::stats::wilson_interval;

/// Number format of the receiver under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    Fp,
    Fixed16,
    Int8,
}

impl Arithmetic {
    pub fn name(self) -> &'static str {
        match self {
            Arithmetic::Fp => "fp",
            Arithmetic::Fixed16 => "fixed16",
            Arithmetic::Int8 => "int8",
        }
    }

    pub fn parse(s: &str) -> LabResult<Self> {
        match s {
            "fp" => Ok(Self::Fp),
            "fixed16" => Ok(Self::Fixed16),
            "int8" => Ok(Self::Int8),
            _ => Err(LabError::Config(format!("unknown arithmetic `{s}` (fp, fixed16, int8)"))),
        }
    }
}

impl fmt::Display for Arithmetic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One simulated SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub variant: String,
    pub modulation: usize,
    pub arithmetic: Arithmetic,
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The bit cap was reached before the error target.
    pub capped: bool,
    pub seed: u64,
    pub config_hash: String,
}

/// Where INT8 inference runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Int8Engine {
    /// Direct integer forward.
    Reference,
    /// Cycle-level accelerator model.
    Ddna {
        pea: PeaConfig,
        buffers: BufferModel,
    },
}

/// A transmitter/receiver pair in a fixed number format.
#[derive(Debug, Clone)]
pub struct Link {
    pub variant: SystemVariant,
    pub arithmetic: Arithmetic,
    graph: Option<(QuantizedGraph, Int8Engine)>,
}

impl Link {
    pub fn float(variant: SystemVariant) -> Self {
        Self {
            variant,
            arithmetic: Arithmetic::Fp,
            graph: None,
        }
    }

    /// Conventional chain with the 16-bit fixed-point FFT.
    pub fn fixed16(variant: SystemVariant) -> LabResult<Self> {
        if variant.kind != VariantKind::Conventional {
            return Err(LabError::Config(
                "fixed16 arithmetic applies to the conventional receiver only".into(),
            ));
        }
        Ok(Self {
            variant,
            arithmetic: Arithmetic::Fixed16,
            graph: None,
        })
    }

    /// Float transmitter, INT8 receiver.
    pub fn int8(variant: SystemVariant, graph: QuantizedGraph, engine: Int8Engine) -> LabResult<Self> {
        if variant.kind == VariantKind::Conventional || graph.demod.is_none() {
            return Err(LabError::Config(
                "int8 arithmetic needs a learned receiver with a Demod-Net".into(),
            ));
        }
        Ok(Self {
            variant,
            arithmetic: Arithmetic::Int8,
            graph: Some((graph, engine)),
        })
    }

    /// Hard bits for each received frame.
    pub fn detect(&self, frames: &[ComplexVec], noise_vars: &[f64]) -> LabResult<Vec<Vec<u8>>> {
        let cfg = &self.variant.cfg;
        match self.arithmetic {
            Arithmetic::Fp => Ok(self
                .variant
                .detect_batch(frames, noise_vars)?
                .into_iter()
                .map(|b| b.bits)
                .collect()),
            Arithmetic::Fixed16 => frames
                .iter()
                .zip(noise_vars)
                .map(|(y, &nv)| Ok(conventional_rx(y, cfg, nv, FftEngine::Fixed16)?.bits))
                .collect(),
            Arithmetic::Int8 => {
                let (g, engine) = self.graph.as_ref().expect("int8 link has a graph");
                let (syms, s) = (cfg.syms_per_frame, cfg.sym_len());
                let mut rows = Vec::with_capacity(frames.len() * 2 * syms * s);
                for y in frames {
                    rows.extend(samples_to_rows(y, syms, s)?.into_data());
                }
                let rows = RealTensor::new(&[frames.len() * 2 * syms, s], rows)?;
                let q = g.quantize_input(&rows);
                let out = match engine {
                    Int8Engine::Reference => g.int_forward(&q, frames.len())?,
                    Int8Engine::Ddna { pea, buffers } => {
                        run_pipeline(g, &q, frames.len(), pea, buffers, &PipelinePolicy::default())?.output
                    }
                };
                let scores = out.scores.expect("graph has a Demod-Net");
                let per = 2 * cfg.bits_per_frame();
                Ok(scores
                    .chunks_exact(per)
                    .map(|c| {
                        let f: Vec<f64> = c.iter().map(|&v| f64::from(v)).collect();
                        hard_decisions(&f)
                    })
                    .collect())
            }
        }
    }
}

/// Simulates one SNR point until `min_bits` are in and either `max_errors`
/// errors were seen or `max_bits` is reached.
pub fn simulate_point(link: &Link, sweep: &SweepConfig, snr_db: f64, seed: u64) -> LabResult<BerRecord> {
    let cfg = &link.variant.cfg;
    let bpf = cfg.bits_per_frame() as u64;
    let mut rng = SimRng::new(seed);
    let (mut bits, mut errors) = (0u64, 0u64);
    while bits < sweep.min_bits || (errors < sweep.max_errors && bits < sweep.max_bits) {
        let left = sweep.max_bits.max(sweep.min_bits) - bits;
        let n = (sweep.batch_frames as u64).min(left.div_ceil(bpf)).max(1) as usize;
        let mut tx_bits = Vec::with_capacity(n);
        let mut rx = Vec::with_capacity(n);
        let mut vars = Vec::with_capacity(n);
        for _ in 0..n {
            let b = rng.bits(bpf as usize);
            let (y, nv) = awgn_with(&link.variant.transmit(&b)?, snr_db, &mut rng)?;
            tx_bits.push(b);
            rx.push(y);
            vars.push(nv);
        }
        let hard = link.detect(&rx, &vars)?;
        for (a, b) in tx_bits.iter().zip(&hard) {
            errors += a.iter().zip(b).filter(|(x, y)| x != y).count() as u64;
            bits += a.len() as u64;
        }
    }
    let (lo, hi) = wilson_interval(errors, bits);
    Ok(BerRecord {
        variant: link.variant.kind.name().to_string(),
        modulation: cfg.mod_order_bits,
        arithmetic: link.arithmetic,
        snr_db,
        bits,
        errors,
        ber: errors as f64 / bits as f64,
        ci_low: lo,
        ci_high: hi,
        capped: errors < sweep.max_errors,
        seed,
        config_hash: String::new(),
    })
}

/// Seed of grid point `index` for a sweep seeded with `seed`.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, 0x5eed_0000 + index as u64)
}

/// Every grid point in parallel on a pool of `workers` threads (0 = all
/// cores). Records come back ordered by SNR regardless of scheduling.
pub fn run_sweep(
    link: &Link,
    sweep: &SweepConfig,
    seed: u64,
    workers: usize,
    config_hash: &str,
) -> LabResult<Vec<BerRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    let mut out: Vec<BerRecord> = pool.install(|| {
        sweep
            .snr_db
            .par_iter()
            .enumerate()
            .map(|(i, &snr)| {
                let r = simulate_point(link, sweep, snr, point_seed(seed, i));
                if let Ok(r) = &r {
                    log::info!(
                        "{} {} {:.1} dB: {} / {} bits (ber {:.3e})",
                        r.variant,
                        r.arithmetic,
                        snr,
                        r.errors,
                        r.bits,
                        r.ber
                    );
                }
                r
            })
            .collect::<LabResult<Vec<_>>>()
    })?;
    for r in &mut out {
        r.config_hash = config_hash.to_string();
    }
    sort_records(&mut out);
    Ok(out)
}

/// Canonical order: variant, modulation, arithmetic, SNR.
pub fn sort_records(records: &mut [BerRecord]) {
    records.sort_by(|a, b| {
        (a.variant.as_str(), a.modulation, a.arithmetic)
            .cmp(&(b.variant.as_str(), b.modulation, b.arithmetic))
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.seed.cmp(&b.seed))
    });
}
