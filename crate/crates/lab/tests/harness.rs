use std::fs;
use std::path::Path;
use std::process::Command;

use ofdm_nn_core::deploy::QuantizedGraph;
use ofdm_nn_core::models::{count_complexity, DemodVariant, SystemVariant, VariantKind};
use ofdm_nn_core::ofdm::FrameConfig;
use ofdm_nn_lab::bundle::{load_model, load_quantized, save_model, save_quantized};
use ofdm_nn_lab::commands::{self, ComplexityRow, TrainOptions};
use ofdm_nn_lab::csvio::read_csv;
use ofdm_nn_lab::stats::{snr_at_ber, wilson_interval};
use ofdm_nn_lab::sweep::{run_sweep, simulate_point};
use ofdm_nn_lab::{Arithmetic, BerRecord, ExperimentConfig, Int8Engine, LabError, Link, SweepConfig};

fn small_train_config(variant: VariantKind, m: usize, steps: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        variant,
        frame: FrameConfig::with_modulation(m),
        demod_variant: 2,
        ..ExperimentConfig::default()
    };
    cfg.train.steps = steps;
    cfg.train.batch_train = 8;
    cfg.train.batch_eval = 64;
    cfg.train.val_every = 0;
    cfg.quant.calib_frames = 32;
    cfg.quant.check_frames = 16;
    cfg
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn config_defaults_and_round_trip() {
    let cfg = ExperimentConfig::from_toml_str("").unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    assert_eq!(cfg.sweep.min_bits, 100_000);
    assert_eq!(cfg.sweep.max_errors, 100);
    assert_eq!(cfg.sweep.max_bits, 10_000_000);
    let text = cfg.to_toml_string().unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    assert_eq!(cfg.hash(), ExperimentConfig::default().hash());
    assert_eq!(cfg.hash().len(), 64);
    assert_ne!(cfg.hash(), cfg.clone().with_seed(7).hash());

    let partial = ExperimentConfig::from_toml_str(
        "variant = \"dl-transceiver\"\nseed = 3\n[frame]\nmod_order_bits = 1\n[sweep]\nsnr_db = [0.0, 2.0]\n",
    )
    .unwrap();
    assert_eq!(partial.variant, VariantKind::DlTransceiver);
    assert_eq!(partial.frame.mod_order_bits, 1);
    assert_eq!(partial.frame.n_fft, 64);
    assert_eq!(partial.sweep.snr_db, vec![0.0, 2.0]);
    assert_eq!(partial.train, ExperimentConfig::default().train);
}

#[test]
fn readme_example_config_parses() {
    let readme = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap();
    let block = readme.split("```toml\n").nth(1).unwrap().split("```").next().unwrap();
    let cfg = ExperimentConfig::from_toml_str(block).unwrap();
    assert_eq!(cfg.variant, VariantKind::DlTransceiver);
    assert_eq!(cfg.demod_variant, 1);
    assert_eq!(cfg.train.steps, 8000);
}

#[test]
fn config_rejects_invalid_values() {
    for bad in [
        "[sweep]\nmin_bits = 1000\n",
        "[sweep]\nsnr_db = [4.0, 2.0]\n",
        "[sweep]\nsnr_db = [1.0, 1.0]\n",
        "demod_variant = 3\n",
        "[frame]\nmod_order_bits = 3\n",
        "[pea]\nrows = 12\n",
        "[train]\nbatch_train = 0\n",
        "unknown_key = [",
        "sed = 3\n",
    ] {
        assert!(ExperimentConfig::from_toml_str(bad).is_err(), "accepted: {bad}");
    }
}

#[test]
fn wilson_interval_matches_closed_form() {
    let z = 1.959_963_984_540_054_f64;
    for (k, n) in [(50u64, 100u64), (3, 1000), (0, 500), (500, 500)] {
        let (lo, hi) = wilson_interval(k, n);
        let (kf, nf) = (k as f64, n as f64);
        let p = kf / nf;
        let c = (kf + z * z / 2.0) / (nf + z * z);
        let h = z * nf.sqrt() / (nf + z * z) * (p * (1.0 - p) + z * z / (4.0 * nf)).sqrt();
        assert!((lo - (c - h).max(0.0)).abs() < 1e-12 && (hi - (c + h).min(1.0)).abs() < 1e-12);
        assert!(k > 0 || lo == 0.0);
        assert!(k < n || hi == 1.0);
        assert!(lo <= p && p <= hi);
    }
    assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
}

#[test]
fn snr_crossing_interpolates_in_log_domain() {
    let pts = [(0.0, 1e-1), (2.0, 1e-2), (4.0, 1e-3)];
    assert!((snr_at_ber(&pts, 1e-2).unwrap() - 2.0).abs() < 1e-12);
    assert!((snr_at_ber(&pts, 10f64.powf(-1.5)).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(snr_at_ber(&pts, 1e-5), None);
    assert_eq!(snr_at_ber(&pts, 0.5), None);
}

#[test]
fn sweep_stops_on_errors_and_caps_clean_points() {
    let link = Link::float(SystemVariant::conventional(FrameConfig::with_modulation(2)));
    let sweep = SweepConfig {
        snr_db: vec![0.0, 300.0],
        min_bits: 100_000,
        max_errors: 100,
        max_bits: 200_000,
        batch_frames: 32,
    };
    let noisy = simulate_point(&link, &sweep, 0.0, 1).unwrap();
    assert!(noisy.bits >= 100_000 && noisy.errors >= 100 && !noisy.capped);
    assert_eq!(noisy.ber, noisy.errors as f64 / noisy.bits as f64);
    let clean = simulate_point(&link, &sweep, 300.0, 1).unwrap();
    assert_eq!(clean.errors, 0);
    assert!(clean.capped && clean.bits >= 200_000);
    // Either the estimate is tight or the point says it was capped.
    for r in [noisy, clean] {
        assert!(r.capped || (r.ci_high - r.ci_low) / 2.0 <= 0.3 * r.ber);
    }
}

#[test]
fn sweep_is_deterministic_and_ordered_across_worker_counts() {
    let link = Link::float(SystemVariant::conventional(FrameConfig::with_modulation(1)));
    let sweep = SweepConfig {
        snr_db: vec![-2.0, 0.0, 2.0, 4.0],
        ..SweepConfig::default()
    };
    let a = run_sweep(&link, &sweep, 11, 1, "h").unwrap();
    let b = run_sweep(&link, &sweep, 11, 3, "h").unwrap();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0].snr_db < w[1].snr_db));
    assert!(a.iter().all(|r| r.config_hash == "h" && r.arithmetic == Arithmetic::Fp));
    let c = run_sweep(&link, &sweep, 12, 1, "h").unwrap();
    assert_ne!(a, c);
}

#[test]
fn fixed_point_fft_tracks_float_receiver() {
    let v = SystemVariant::conventional(FrameConfig::with_modulation(2));
    let sweep = SweepConfig {
        snr_db: vec![6.0],
        ..SweepConfig::default()
    };
    let fp = run_sweep(&Link::float(v.clone()), &sweep, 5, 1, "").unwrap();
    let fx = run_sweep(&Link::fixed16(v.clone()).unwrap(), &sweep, 5, 1, "").unwrap();
    assert_eq!(fx[0].arithmetic, Arithmetic::Fixed16);
    assert!((fx[0].ber - fp[0].ber).abs() < 0.1 * fp[0].ber, "{} vs {}", fx[0].ber, fp[0].ber);
    assert!(Link::fixed16(SystemVariant::new(VariantKind::DlReceiver, v.cfg.clone(), DemodVariant::Split, 1)).is_err());
}

#[test]
fn learned_sweeps_require_a_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();
    let err = commands::ber_sweep(&cfg, None, Arithmetic::Fp, Int8Engine::Reference, dir.path(), 1).unwrap_err();
    assert!(matches!(err, LabError::MissingBundle(_)), "{err}");
    let err = commands::ber_sweep(&cfg, Some(&dir.path().join("nope")), Arithmetic::Fp, Int8Engine::Reference, dir.path(), 1)
        .unwrap_err();
    assert!(matches!(err, LabError::Bundle { .. }), "{err}");
    let conv = ExperimentConfig {
        variant: VariantKind::Conventional,
        ..ExperimentConfig::default()
    };
    assert!(commands::ber_sweep(&conv, None, Arithmetic::Int8, Int8Engine::Reference, dir.path(), 1).is_err());
}

#[test]
fn model_bundle_round_trip_and_integrity() {
    let dir = tempfile::tempdir().unwrap();
    let v = SystemVariant::new(VariantKind::DlTransceiver, FrameConfig::default(), DemodVariant::Joint, 4);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    save_model(&a, &v, "cafe").unwrap();
    save_model(&b, &v, "cafe").unwrap();
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    let (m, back) = load_model(&a).unwrap();
    assert_eq!(back, v);
    assert_eq!(m.config_hash, "cafe");
    assert_eq!(m.demod_variant, 1);

    // Flip one byte of one array.
    let entry = &m.arrays[0];
    let path = a.join(&entry.file);
    let mut bytes = fs::read(&path).unwrap();
    bytes[0] ^= 1;
    fs::write(&path, bytes).unwrap();
    let err = load_model(&a).unwrap_err();
    assert!(err.to_string().contains("checksum"), "{err}");
    // A model bundle is not a quantized bundle.
    assert!(load_quantized(&b).is_err());
}

fn trained(dir: &Path, variant: VariantKind, m: usize, steps: usize) -> (ExperimentConfig, SystemVariant) {
    let cfg = small_train_config(variant, m, steps);
    let out = commands::train(&cfg, dir, TrainOptions::default()).unwrap();
    (cfg, out.variant)
}

#[test]
fn train_smoke_run_writes_loadable_bundle_and_loss_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (_, v) = trained(dir.path(), VariantKind::DlReceiver, 1, 500);
    let (_, back) = load_model(&dir.path().join("model")).unwrap();
    assert_eq!(back, v);
    #[derive(serde::Deserialize)]
    struct Row {
        step: usize,
        loss: f64,
        lr: f64,
    }
    let rows: Vec<Row> = read_csv(&dir.path().join("loss.csv")).unwrap();
    assert_eq!(rows.len(), 500);
    assert!(rows.iter().enumerate().all(|(i, r)| r.step == i && r.loss.is_finite() && r.lr > 0.0));
    let head: f64 = rows[..50].iter().map(|r| r.loss).sum::<f64>() / 50.0;
    let tail: f64 = rows[450..].iter().map(|r| r.loss).sum::<f64>() / 50.0;
    assert!(tail < head, "loss did not fall: {head} -> {tail}");
}

#[test]
fn training_is_reproducible_and_resumable() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small_train_config(VariantKind::DlTransceiver, 2, 20);
    let a = root.path().join("a");
    let b = root.path().join("b");
    let c = root.path().join("c");
    commands::train(&cfg, &a, TrainOptions::default()).unwrap();
    commands::train(&cfg, &b, TrainOptions::default()).unwrap();
    assert_eq!(dir_bytes(&a.join("model")), dir_bytes(&b.join("model")));
    assert_eq!(fs::read(a.join("loss.csv")).unwrap(), fs::read(b.join("loss.csv")).unwrap());

    // Interrupted after 8 steps, then resumed.
    let first = TrainOptions {
        max_steps: Some(8),
        ..TrainOptions::default()
    };
    commands::train(&cfg, &c, first).unwrap();
    let rows: Vec<commands::LossRow> = read_csv(&c.join("loss.csv")).unwrap();
    assert_eq!(rows.len(), 8);
    let resume = TrainOptions {
        resume: true,
        ..TrainOptions::default()
    };
    commands::train(&cfg, &c, resume).unwrap();
    assert_eq!(dir_bytes(&a.join("model")), dir_bytes(&c.join("model")));
    assert_eq!(fs::read(a.join("loss.csv")).unwrap(), fs::read(c.join("loss.csv")).unwrap());

    // A checkpoint for a different link is refused.
    let other = small_train_config(VariantKind::DlReceiver, 2, 20);
    assert!(commands::train(&other, &c, resume).is_err());
    let conv = ExperimentConfig {
        variant: VariantKind::Conventional,
        ..cfg
    };
    assert!(commands::train(&conv, &root.path().join("d"), TrainOptions::default()).is_err());
}

#[test]
fn quantize_and_simulate_a_trained_receiver() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, v) = trained(dir.path(), VariantKind::DlReceiver, 2, 30);
    let qdir = dir.path().join("q");
    let report = commands::quantize(&cfg, &dir.path().join("model"), &qdir).unwrap();
    assert!(report.fusion_max_abs_error <= 1e-5, "{}", report.fusion_max_abs_error);
    assert!(report.int_matches_reference);
    assert!((0.25..0.26).contains(&report.byte_ratio), "{}", report.byte_ratio);
    assert!(qdir.join("quant_report.json").is_file());

    let (m, back, g): (_, SystemVariant, QuantizedGraph) = load_quantized(&qdir.join("quantized")).unwrap();
    assert_eq!(back, v);
    assert_eq!(m.registers.len(), g.registers().len());

    // Same quantized graph through both INT8 engines.
    let mut sweep_cfg = cfg.clone();
    sweep_cfg.sweep = SweepConfig {
        snr_db: vec![4.0],
        ..SweepConfig::default()
    };
    let bundle = qdir.join("quantized");
    let (_, reference) =
        commands::ber_sweep(&sweep_cfg, Some(&bundle), Arithmetic::Int8, Int8Engine::Reference, dir.path(), 1).unwrap();
    let engine = Int8Engine::Ddna {
        pea: cfg.pea,
        buffers: cfg.buffers,
    };
    let (path, ddna) = commands::ber_sweep(&sweep_cfg, Some(&bundle), Arithmetic::Int8, engine, dir.path(), 1).unwrap();
    assert_eq!(reference, ddna);
    assert!(path.ends_with("ber_dl-receiver_m2_int8.csv"));

    let sim = dir.path().join("sim");
    let s = commands::sim_ddna(&cfg, Some(&bundle), 20, 8.0, &sim).unwrap();
    assert!(s.bit_exact && !s.pingpong_conflict);
    assert_eq!(s.flow, "dft+demod");
    let trace = fs::read_to_string(sim.join("trace.csv")).unwrap();
    assert!(trace.starts_with("cycle,stage,event,pass\n"));
    let report = fs::read_to_string(sim.join("cycle_report.csv")).unwrap();
    assert!(report.starts_with(
        "pea_cycles,conv_cycles,dma_cycles,control_cycles,total_cycles,frames,symbols,frame_cycles,\
         frame_latency_us,symbol_latency_us,rate_sps,macs,gops\n"
    ));
    let layers = fs::read_to_string(sim.join("layers.csv")).unwrap();
    assert!(layers.contains("DFT-Net,Linear-12,16,80,16,80,204800,831"));

    // Quantized bundles survive a round trip bit for bit.
    let again = dir.path().join("again");
    save_quantized(&again, &back, &g, &m.config_hash).unwrap();
    assert_eq!(dir_bytes(&again), dir_bytes(&bundle));
}

#[test]
fn dft_only_simulation_without_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();
    let s = commands::sim_ddna(&cfg, None, 16, 20.0, dir.path()).unwrap();
    assert_eq!(s.flow, "dft");
    assert!(s.bit_exact);
    assert!((s.report.symbol_latency_us - 0.456).abs() < 0.01, "{}", s.report.symbol_latency_us);
    let first = fs::read(dir.path().join("trace.csv")).unwrap();
    commands::sim_ddna(&cfg, None, 16, 20.0, dir.path()).unwrap();
    assert_eq!(first, fs::read(dir.path().join("trace.csv")).unwrap());
    assert!(commands::sim_ddna(&cfg, None, 0, 20.0, dir.path()).is_err());
}

#[test]
fn report_merges_sorts_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();

    let empty = dir.path().join("empty");
    let records = commands::report(&cfg, &[], &empty).unwrap();
    assert!(records.is_empty());
    let summary = fs::read_to_string(empty.join("ber_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.starts_with("variant,modulation,arithmetic,snr_db,bits,errors,ber,"));

    let rows: Vec<ComplexityRow> = read_csv(&empty.join("complexity.csv")).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let c = count_complexity(
            &FrameConfig::with_modulation(r.modulation),
            DemodVariant::from_index(r.demod_variant).unwrap(),
        );
        assert_eq!((r.weights, r.params_unfused, r.params_fused, r.macs), (c.weights, c.params_unfused, c.params_fused, c.macs));
    }
    let layers = fs::read_to_string(empty.join("layer_table.csv")).unwrap();
    assert!(layers.contains("Demod-Net2,Linear-1/2") && layers.contains("Demod-Net1,Linear"));

    // Two sweeps written out of order.
    let sweeps = dir.path().join("sweeps");
    let mut conv = ExperimentConfig {
        variant: VariantKind::Conventional,
        ..ExperimentConfig::default()
    };
    conv.sweep.snr_db = vec![2.0, 6.0];
    commands::ber_sweep(&conv, None, Arithmetic::Fixed16, Int8Engine::Reference, &sweeps, 2).unwrap();
    commands::ber_sweep(&conv, None, Arithmetic::Fp, Int8Engine::Reference, &sweeps, 2).unwrap();
    let out = dir.path().join("report");
    let merged = commands::report(&cfg, &[sweeps.clone()], &out).unwrap();
    assert_eq!(merged.len(), 4);
    assert_eq!(merged[0].arithmetic, Arithmetic::Fp);
    let first: Vec<_> = dir_bytes(&out);
    commands::report(&cfg, &[sweeps.clone(), sweeps.join("ber_conventional_m2_fp.csv")], &out).unwrap();
    assert_eq!(first, dir_bytes(&out));
    let back: Vec<BerRecord> = read_csv(&out.join("ber_summary.csv")).unwrap();
    assert_eq!(back, merged);
    let md = fs::read_to_string(out.join("report.md")).unwrap();
    assert!(md.contains("| conventional | 2 | fixed16 |"));
}

#[test]
fn cli_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_ofdm-nn");
    let dir = tempfile::tempdir().unwrap();
    let ok = Command::new(exe)
        .args(["--out"])
        .arg(dir.path().join("r"))
        .arg("report")
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let missing = Command::new(exe).arg("--out").arg(dir.path()).arg("ber-sweep").output().unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("bundle"));

    let cfg_path = dir.path().join("c.toml");
    fs::write(&cfg_path, "variant = \"conventional\"\n[sweep]\nsnr_db = [300.0]\nmax_bits = 100000\n").unwrap();
    let run = |seed: &str, out: &str| {
        let o = Command::new(exe)
            .arg("--config")
            .arg(&cfg_path)
            .args(["--seed", seed, "--workers", "1", "--out"])
            .arg(dir.path().join(out))
            .arg("ber-sweep")
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(dir.path().join(out).join("ber_conventional_m2_fp.csv")).unwrap()
    };
    let a = run("5", "s1");
    assert_eq!(a, run("5", "s2"));
    assert_ne!(a, run("6", "s3"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(",0,0.0,"), "{text}");

    let bad = Command::new(exe).arg("--config").arg(dir.path().join("absent.toml")).arg("report").output().unwrap();
    assert!(!bad.status.success());
}
