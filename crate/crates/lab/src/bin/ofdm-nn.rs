use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ofdm_nn_lab::commands;
use ofdm_nn_lab::{Arithmetic, ExperimentConfig, Int8Engine};

#[derive(Parser)]
#[command(name = "ofdm-nn", version, about = "Learned OFDM transceiver laboratory")]
struct Cli {
    /// Experiment config (TOML); every field has a default.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Overrides the experiment and training seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, short, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArithArg {
    Fp,
    Fixed16,
    Int8,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    /// Integer forward pass.
    Reference,
    /// Cycle-level accelerator model.
    Ddna,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train the configured variant end to end.
    Train {
        /// Continue from <out>/checkpoint if it exists.
        #[arg(long)]
        resume: bool,
        /// Write a checkpoint every N steps (0 = only at the end).
        #[arg(long, default_value_t = 500)]
        checkpoint_every: usize,
        /// Stop after at most N new steps (resume later with --resume).
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Monte-Carlo BER over the configured SNR grid.
    BerSweep {
        /// Model bundle (fp) or quantized bundle (int8).
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "fp")]
        arithmetic: ArithArg,
        #[arg(long, value_enum, default_value = "reference")]
        engine: EngineArg,
    },
    /// Fuse batch norm, calibrate and quantize a trained model to INT8.
    Quantize {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Run the accelerator model and write layer, cycle and trace tables.
    SimDdna {
        /// Quantized bundle; without one the analytic DFT-Net runs alone.
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        frames: usize,
        #[arg(long, default_value_t = 10.0)]
        snr_db: f64,
    },
    /// Merge BER CSVs (files or directories) into a summary report, with the
    /// complexity and cycle tables of the configuration.
    Report { inputs: Vec<PathBuf> },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    Ok(match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    log::info!("config hash {}", cfg.hash());
    match &cli.cmd {
        Cmd::Train { resume, checkpoint_every, max_steps } => {
            let opts = commands::TrainOptions {
                resume: *resume,
                checkpoint_every: *checkpoint_every,
                max_steps: *max_steps,
            };
            let o = commands::train(&cfg, &cli.out, opts)?;
            println!("model written to {}", o.model_dir.display());
        }
        Cmd::BerSweep { bundle, arithmetic, engine } => {
            let arithmetic = match arithmetic {
                ArithArg::Fp => Arithmetic::Fp,
                ArithArg::Fixed16 => Arithmetic::Fixed16,
                ArithArg::Int8 => Arithmetic::Int8,
            };
            let engine = match engine {
                EngineArg::Reference => Int8Engine::Reference,
                EngineArg::Ddna => Int8Engine::Ddna {
                    pea: cfg.pea,
                    buffers: cfg.buffers,
                },
            };
            let (path, records) =
                commands::ber_sweep(&cfg, bundle.as_deref(), arithmetic, engine, &cli.out, cli.workers)?;
            for r in &records {
                println!("{:>6.2} dB  ber {:.4e}  ({} / {})", r.snr_db, r.ber, r.errors, r.bits);
            }
            println!("wrote {}", path.display());
        }
        Cmd::Quantize { bundle } => {
            let r = commands::quantize(&cfg, bundle, &cli.out)?;
            println!(
                "fusion error {:.2e}, int == reference: {}, int8/f32 bytes {:.4}",
                r.fusion_max_abs_error, r.int_matches_reference, r.byte_ratio
            );
            if !r.int_matches_reference {
                anyhow::bail!("integer forward disagrees with the fake-quant reference");
            }
        }
        Cmd::SimDdna { bundle, frames, snr_db } => {
            let s = commands::sim_ddna(&cfg, bundle.as_deref(), *frames, *snr_db, &cli.out)?;
            println!(
                "{} frames: {} cycles, {:.3} us/frame, {:.3} us/symbol, {:.1} GOPS, bit-exact: {}",
                s.frames,
                s.report.total_cycles,
                s.report.frame_latency_us,
                s.report.symbol_latency_us,
                s.report.gops,
                s.bit_exact
            );
            if !s.bit_exact {
                anyhow::bail!("accelerator output differs from the integer reference");
            }
        }
        Cmd::Report { inputs } => {
            let records = commands::report(&cfg, inputs, &cli.out)?;
            println!("{} records summarized in {}", records.len(), cli.out.display());
        }
    }
    Ok(())
}
