use alloc::format;
use alloc::vec::Vec;

use super::layout::{frame_channels_to_rows, rows_to_frame_channels, samples_to_rows};
use super::variant::{run_variant_batch, SystemVariant, VariantKind};
use crate::math::{cos, db_to_linear, sqrt};
use crate::nn::{bce_with_logits, AdamConfig, AdamState, BnMode, Parameters, RealTensor};
use crate::ofdm::{ber, conventional_tx};
use crate::params::{ArrayStore, NamedArray};
use crate::rng::{derive_seed, SimRng};
use crate::{Error, Result};

const WARMUP_TAG: u64 = 0x3a3a_0001;
const VAL_TAG: u64 = 0x3a3a_0002;
const POWER_TAG: u64 = 0x3a3a_0003;
/// Frames used to measure eval-mode transmit power.
pub const POWER_FRAMES: usize = 256;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    /// Per-frame training SNR is drawn uniformly from this range.
    pub snr_range_db: [f64; 2],
    pub lr: f64,
    /// Cosine decay ends at `lr * lr_final_ratio`.
    pub lr_final_ratio: f64,
    pub batch_train: usize,
    pub batch_eval: usize,
    pub steps: usize,
    pub seed: u64,
    /// Validation BER is measured every `val_every` steps (0 disables).
    pub val_every: usize,
    /// Stop when validation BER has not improved for this many steps.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            snr_range_db: [-10.0, 30.0],
            lr: 0.003,
            lr_final_ratio: 0.1,
            batch_train: 1024,
            batch_eval: 512,
            steps: 30_000,
            seed: 0,
            val_every: 250,
            patience: 2_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_train < 2 || self.batch_eval == 0 || self.steps == 0 {
            return Err(Error::Config("batch sizes and steps must be positive (train batch ≥ 2)".into()));
        }
        if !(self.snr_range_db[0] <= self.snr_range_db[1]) {
            return Err(Error::Config(format!(
                "snr range {:?} is not ordered",
                self.snr_range_db
            )));
        }
        if !(self.lr > 0.0) || !(self.lr_final_ratio > 0.0 && self.lr_final_ratio <= 1.0) {
            return Err(Error::Config("learning rate settings out of range".into()));
        }
        Ok(())
    }

    /// Cosine-decayed learning rate for step `t`.
    pub fn lr_at(&self, t: usize) -> f64 {
        let frac = (t as f64 / self.steps.max(1) as f64).min(1.0);
        let lo = self.lr * self.lr_final_ratio;
        lo + 0.5 * (self.lr - lo) * (1.0 + cos(core::f64::consts::PI * frac))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub losses: Vec<f64>,
    /// `(step, validation BER)` pairs.
    pub val_ber: Vec<(usize, f64)>,
    pub stopped_early: bool,
}

/// Resumable end-to-end trainer for the DL variants.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub variant: SystemVariant,
    pub tc: TrainConfig,
    pub adam: AdamState,
    pub step: usize,
    pub report: TrainReport,
    best_val: f64,
    best_step: usize,
}

fn all_params(v: &mut SystemVariant) -> Vec<&mut [f64]> {
    let mut p = Vec::new();
    if let Some(n) = v.tx_net.as_mut() {
        p.extend(n.params_mut());
    }
    if let Some(n) = v.rx_net.as_mut() {
        p.extend(n.params_mut());
    }
    if let Some(n) = v.demod_net.as_mut() {
        p.extend(n.params_mut());
    }
    p
}

/// Per-frame mean `|x|²` of rows laid out `[frames·2F, S]`.
fn frame_powers(rows: &RealTensor, frames: usize) -> Vec<f64> {
    let per = rows.len() / frames;
    rows.data()
        .chunks_exact(per)
        .map(|f| f.iter().map(|v| v * v).sum::<f64>() / (per / 2) as f64)
        .collect()
}

impl Trainer {
    pub fn new(mut variant: SystemVariant, tc: TrainConfig) -> Result<Self> {
        tc.validate()?;
        if variant.kind == VariantKind::Conventional {
            return Err(Error::Config("the conventional chain has nothing to train".into()));
        }
        variant.rx_net()?;
        variant.demod_net()?;
        Self::calibrate_bn(&mut variant, &tc)?;
        let sizes: Vec<usize> = all_params(&mut variant).iter().map(|p| p.len()).collect();
        let adam = AdamState::new(
            AdamConfig {
                lr: tc.lr,
                ..AdamConfig::default()
            },
            &sizes,
        );
        Ok(Self {
            variant,
            tc,
            adam,
            step: 0,
            report: TrainReport::default(),
            best_val: f64::INFINITY,
            best_step: 0,
        })
    }

    /// Identity warm-up of the DFT-Net batch norms on a representative batch,
    /// so train-mode normalization starts out as a no-op.
    fn calibrate_bn(v: &mut SystemVariant, tc: &TrainConfig) -> Result<()> {
        let mut rng = SimRng::stream(derive_seed(tc.seed, WARMUP_TAG), 0);
        let frames = tc.batch_train.clamp(2, 256);
        let (x, _) = Self::tx_batch_fixed(v, frames, &mut rng)?;
        let mut tx_rows = x;
        if let Some(tx) = v.tx_net.as_mut() {
            tx.calibrate_identity_bn(&tx_rows)?;
            tx_rows = tx.forward(&tx_rows)?;
        }
        let snrs: Vec<f64> = (0..frames)
            .map(|_| rng.uniform(tc.snr_range_db[0], tc.snr_range_db[1]))
            .collect();
        let y = add_noise(&tx_rows, frames, &snrs, &mut rng)?;
        v.rx_net
            .as_mut()
            .ok_or(Error::MissingNet("rx dft-net"))?
            .calibrate_identity_bn(&y)?;
        Ok(())
    }

    /// Input rows of the first differentiable stage: time samples for the
    /// DL receiver, frequency grids for the DL transceiver.
    fn tx_batch_fixed(v: &SystemVariant, frames: usize, rng: &mut SimRng) -> Result<(RealTensor, Vec<u8>)> {
        let cfg = &v.cfg;
        let bpf = cfg.bits_per_frame();
        let bits = rng.bits(frames * bpf);
        let (syms, s) = (cfg.syms_per_frame, cfg.sym_len());
        let mut rows = Vec::with_capacity(frames * 2 * syms * s);
        for fb in bits.chunks_exact(bpf) {
            let r = match v.kind {
                VariantKind::DlTransceiver => v.grid_rows(fb)?,
                _ => samples_to_rows(&conventional_tx(fb, cfg)?, syms, s)?,
            };
            rows.extend(r.into_data());
        }
        Ok((RealTensor::new(&[frames * 2 * syms, s], rows)?, bits))
    }

    /// One optimization step; returns the batch loss.
    pub fn train_step(&mut self) -> Result<f64> {
        let tc = &self.tc;
        let b = tc.batch_train;
        let mut rng = SimRng::stream(derive_seed(tc.seed, self.step as u64), 1);
        let (x, bits) = Self::tx_batch_fixed(&self.variant, b, &mut rng)?;
        let snrs: Vec<f64> = (0..b)
            .map(|_| rng.uniform(tc.snr_range_db[0], tc.snr_range_db[1]))
            .collect();
        let v = &mut self.variant;
        let p_ref = v.cfg.nominal_tx_power();

        let (tx_rows, tx_cache) = match v.tx_net.as_mut() {
            Some(tx) => {
                let (mut y, cache) = tx.forward_cached(&x, BnMode::Train)?;
                // Project the transmitter onto the nominal power: the output is
                // linear in the mix parameters, so scaling them scales it.
                let p = frame_powers(&y, b).iter().sum::<f64>() / b as f64;
                if !(p > 0.0) || !p.is_finite() {
                    return Err(Error::Divergence { step: self.step, loss: p });
                }
                let c = sqrt(p_ref / p);
                tx.mix.weight.iter_mut().for_each(|w| *w *= c);
                tx.mix.bias.iter_mut().for_each(|w| *w *= c);
                y.data_mut().iter_mut().for_each(|w| *w *= c);
                (y, Some(cache))
            }
            None => (x, None),
        };
        let y = add_noise(&tx_rows, b, &snrs, &mut rng)?;
        let rx = v.rx_net.as_mut().ok_or(Error::MissingNet("rx dft-net"))?;
        let (feat, rx_cache) = rx.forward_cached(&y, BnMode::Train)?;
        let dx_in = rows_to_frame_channels(&feat, b)?;
        let demod = v.demod_net.as_mut().ok_or(Error::MissingNet("demod-net"))?;
        let (z, d_cache) = demod.forward_cached(&dx_in, BnMode::Train)?;

        let mut targets = Vec::with_capacity(z.len());
        for &bit in &bits {
            targets.push(1.0 - bit as f64);
            targets.push(bit as f64);
        }
        let (loss, dz) = bce_with_logits(z.data(), &targets);
        if !loss.is_finite() {
            return Err(Error::Divergence { step: self.step, loss });
        }
        let dz = RealTensor::new(z.shape(), dz)?;

        let (d_feat, g_demod) = demod.backward(&d_cache, &dz)?;
        let s = v.cfg.sym_len();
        let d_feat = frame_channels_to_rows(&d_feat, s)?;
        let rx = v.rx_net.as_ref().ok_or(Error::MissingNet("rx dft-net"))?;
        let (d_y, g_rx) = rx.backward(&rx_cache, &d_feat)?;
        let mut grads = Vec::new();
        if let (Some(tx), Some(cache)) = (v.tx_net.as_ref(), tx_cache.as_ref()) {
            // The channel adds a constant, so its gradient is the identity.
            let (_, g_tx) = tx.backward(cache, &d_y)?;
            grads.extend(g_tx);
        }
        grads.extend(g_rx);
        grads.extend(g_demod);

        self.adam.cfg.lr = tc.lr_at(self.step);
        let grad_refs: Vec<&[f64]> = grads.iter().map(|g| g.as_slice()).collect();
        let mut params = all_params(&mut self.variant);
        self.adam.step(&mut params, &grad_refs)?;
        self.step += 1;
        self.report.losses.push(loss);
        Ok(loss)
    }

    /// The trained variant with its transmitter held at nominal power in
    /// eval mode. Training projects the power under batch statistics; the
    /// running statistics used at inference can drift from them.
    pub fn deployable(&self) -> Result<SystemVariant> {
        let mut v = self.variant.clone();
        v.normalize_tx_power(POWER_FRAMES, derive_seed(self.tc.seed, POWER_TAG))?;
        Ok(v)
    }

    /// BER on a fixed validation set drawn over the training SNR range.
    pub fn validate(&self) -> Result<f64> {
        let tc = &self.tc;
        let variant = self.deployable()?;
        let mut rng = SimRng::stream(derive_seed(tc.seed, VAL_TAG), 0);
        let bpf = self.variant.cfg.bits_per_frame();
        let mut errors = 0u64;
        let mut total = 0u64;
        let chunk = 64;
        let mut left = tc.batch_eval;
        while left > 0 {
            let n = left.min(chunk);
            left -= n;
            let snr = rng.uniform(tc.snr_range_db[0], tc.snr_range_db[1]);
            let frames: Vec<Vec<u8>> = (0..n).map(|_| rng.bits(bpf)).collect();
            let out = run_variant_batch(&variant, &frames, snr, &mut rng)?;
            for (f, o) in frames.iter().zip(&out) {
                let c = ber(f, &o.bits)?;
                errors += c.errors;
                total += c.total;
            }
        }
        Ok(errors as f64 / total as f64)
    }

    pub fn finished(&self) -> bool {
        self.step >= self.tc.steps || self.report.stopped_early
    }

    /// One training step followed, on validation steps, by the plateau
    /// check. Returns the batch loss.
    pub fn advance(&mut self) -> Result<f64> {
        let loss = self.train_step()?;
        if self.tc.val_every > 0 && self.step % self.tc.val_every == 0 {
            let v = self.validate()?;
            self.report.val_ber.push((self.step, v));
            log::info!("step {} loss {loss:.5} val-ber {v:.5}", self.step);
            if v < self.best_val {
                self.best_val = v;
                self.best_step = self.step;
            } else if self.step - self.best_step >= self.tc.patience {
                log::info!("validation plateau since step {}; stopping", self.best_step);
                self.report.stopped_early = true;
            }
        }
        Ok(loss)
    }

    /// Train until the step budget is spent or validation BER plateaus.
    pub fn run(&mut self) -> Result<()> {
        while !self.finished() {
            self.advance()?;
        }
        Ok(())
    }

    /// Full trainer state, including optimizer moments, as named arrays.
    pub fn export_state(&self) -> Vec<NamedArray> {
        let mut out = self.variant.export();
        for (i, (m, v)) in self.adam.m.iter().zip(&self.adam.v).enumerate() {
            out.push(NamedArray::f64(format!("adam.m.{i}"), &[m.len()], m));
            out.push(NamedArray::f64(format!("adam.v.{i}"), &[v.len()], v));
        }
        let meta = [
            self.step as f64,
            self.adam.step as f64,
            self.best_val,
            self.best_step as f64,
            f64::from(u8::from(self.report.stopped_early)),
        ];
        out.push(NamedArray::f64("train.meta", &[meta.len()], &meta));
        out.push(NamedArray::f64("train.losses", &[self.report.losses.len()], &self.report.losses));
        let val: Vec<f64> = self
            .report
            .val_ber
            .iter()
            .flat_map(|&(s, b)| [s as f64, b])
            .collect();
        out.push(NamedArray::f64("train.val", &[self.report.val_ber.len(), 2], &val));
        out
    }

    /// Restores a trainer saved with [`Self::export_state`].
    pub fn resume(variant: SystemVariant, tc: TrainConfig, store: &ArrayStore) -> Result<Self> {
        tc.validate()?;
        let mut variant = variant;
        let sizes: Vec<usize> = all_params(&mut variant).iter().map(|p| p.len()).collect();
        let mut adam = AdamState::new(
            AdamConfig {
                lr: tc.lr,
                ..AdamConfig::default()
            },
            &sizes,
        );
        for (i, &n) in sizes.iter().enumerate() {
            adam.m[i] = store.f64(&format!("adam.m.{i}"), n)?;
            adam.v[i] = store.f64(&format!("adam.v.{i}"), n)?;
        }
        let meta = store.f64("train.meta", 5)?;
        adam.step = meta[1] as u64;
        let step = meta[0] as usize;
        let losses_len = store
            .arrays
            .get("train.losses")
            .map(|a| a.data.len())
            .unwrap_or(0);
        let losses = store.f64("train.losses", losses_len)?;
        let val_len = store.arrays.get("train.val").map(|a| a.data.len()).unwrap_or(0);
        let val = store.f64("train.val", val_len)?;
        Ok(Self {
            variant,
            tc,
            adam,
            step,
            report: TrainReport {
                losses,
                val_ber: val.chunks_exact(2).map(|p| (p[0] as usize, p[1])).collect(),
                stopped_early: meta[4] != 0.0,
            },
            best_val: meta[2],
            best_step: meta[3] as usize,
        })
    }
}

/// Per-frame AWGN on rows `[frames·2F, S]` at the frame's measured power.
fn add_noise(rows: &RealTensor, frames: usize, snrs: &[f64], rng: &mut SimRng) -> Result<RealTensor> {
    let powers = frame_powers(rows, frames);
    let per = rows.len() / frames;
    let mut y = rows.clone();
    for ((f, p), snr) in y.data_mut().chunks_exact_mut(per).zip(&powers).zip(snrs) {
        let sigma = sqrt(p / db_to_linear(*snr) / 2.0);
        f.iter_mut().for_each(|v| *v += sigma * rng.gaussian());
    }
    Ok(y)
}

/// Trains `v` end to end and returns it with the loss and validation curves.
pub fn train_e2e(v: SystemVariant, tc: &TrainConfig) -> Result<(SystemVariant, TrainReport)> {
    let mut t = Trainer::new(v, tc.clone())?;
    t.run()?;
    Ok((t.deployable()?, t.report))
}
