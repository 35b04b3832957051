use alloc::format;
use alloc::vec::Vec;

use super::demod::hard_decisions;
use super::dftnet::{DftNetParams, Direction};
use super::layout::{
    grid_to_rows, rows_to_frame_channels, rows_to_grid, rows_to_samples, samples_to_rows,
};
use super::{DemodNetParams, DemodVariant};
use crate::nn::RealTensor;
use crate::ofdm::{
    awgn_with, build_freq_frame, conventional_rx, conventional_tx, gray_qam_map, BitBlock,
    ComplexVec, FftEngine, FrameConfig,
};
use crate::params::{ArrayStore, NamedArray};
use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum VariantKind {
    Conventional,
    DlReceiver,
    DlTransceiver,
}

impl VariantKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Conventional => "conventional",
            Self::DlReceiver => "dl-receiver",
            Self::DlTransceiver => "dl-transceiver",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "conventional" => Ok(Self::Conventional),
            "dl-receiver" => Ok(Self::DlReceiver),
            "dl-transceiver" => Ok(Self::DlTransceiver),
            _ => Err(Error::Config(format!("unknown variant `{s}`"))),
        }
    }
}

/// One of the three link configurations under comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemVariant {
    pub kind: VariantKind,
    pub cfg: FrameConfig,
    pub tx_net: Option<DftNetParams>,
    pub rx_net: Option<DftNetParams>,
    pub demod_net: Option<DemodNetParams>,
}

impl SystemVariant {
    pub fn conventional(cfg: FrameConfig) -> Self {
        Self {
            kind: VariantKind::Conventional,
            cfg,
            tx_net: None,
            rx_net: None,
            demod_net: None,
        }
    }

    /// DL variant with analytic DFT-Nets and a freshly initialized Demod-Net.
    pub fn new(kind: VariantKind, cfg: FrameConfig, demod: DemodVariant, seed: u64) -> Self {
        if kind == VariantKind::Conventional {
            return Self::conventional(cfg);
        }
        let demod_net = DemodNetParams::new(
            demod,
            cfg.syms_per_frame * cfg.sym_len(),
            cfg.bits_per_frame(),
            seed,
        );
        Self {
            kind,
            tx_net: (kind == VariantKind::DlTransceiver)
                .then(|| DftNetParams::analytic(&cfg, Direction::Inverse)),
            rx_net: Some(DftNetParams::analytic(&cfg, Direction::Forward)),
            demod_net: Some(demod_net),
            cfg,
        }
    }

    pub fn rx_net(&self) -> Result<&DftNetParams> {
        self.rx_net.as_ref().ok_or(Error::MissingNet("rx dft-net"))
    }

    pub fn tx_net(&self) -> Result<&DftNetParams> {
        self.tx_net.as_ref().ok_or(Error::MissingNet("tx dft-net"))
    }

    pub fn demod_net(&self) -> Result<&DemodNetParams> {
        self.demod_net.as_ref().ok_or(Error::MissingNet("demod-net"))
    }

    pub fn demod_variant(&self) -> Option<DemodVariant> {
        self.demod_net.as_ref().map(|d| d.variant())
    }

    fn check_nets(&self) -> Result<()> {
        match self.kind {
            VariantKind::Conventional => Ok(()),
            VariantKind::DlReceiver => self.rx_net().and(self.demod_net()).map(|_| ()),
            VariantKind::DlTransceiver => self
                .tx_net()
                .and(self.rx_net())
                .and(self.demod_net())
                .map(|_| ()),
        }
    }

    /// Frequency grid rows `[2F, S]` (zero-padded) for the TX DFT-Net.
    pub fn grid_rows(&self, bits: &[u8]) -> Result<RealTensor> {
        let cfg = &self.cfg;
        if bits.len() != cfg.bits_per_frame() {
            return Err(Error::LengthMismatch {
                expected: cfg.bits_per_frame(),
                got: bits.len(),
            });
        }
        let grid = build_freq_frame(&gray_qam_map(bits, cfg.mod_order_bits)?, cfg)?;
        grid_to_rows(&grid, cfg.n_fft, cfg.sym_len())
    }

    /// Rescales the transmitter so its eval-mode output has the nominal
    /// mean power over `frames` random frames. The TX DFT-Net is linear in
    /// its mix parameters, so scaling them scales every output sample.
    /// Returns the applied amplitude factor (1 without a TX net).
    pub fn normalize_tx_power(&mut self, frames: usize, seed: u64) -> Result<f64> {
        let Some(tx) = self.tx_net.as_ref() else {
            return Ok(1.0);
        };
        let mut rng = SimRng::stream(seed, 0x7057);
        let bpf = self.cfg.bits_per_frame();
        let mut rows = Vec::new();
        for _ in 0..frames.max(1) {
            rows.extend(self.grid_rows(&rng.bits(bpf))?.into_data());
        }
        let s = self.cfg.sym_len();
        let rows = RealTensor::new(&[rows.len() / s, s], rows)?;
        let y = tx.forward(&rows)?;
        let p = y.data().iter().map(|v| v * v).sum::<f64>() / (y.len() / 2) as f64;
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Config(format!("transmitter output power {p} cannot be normalized")));
        }
        let c = crate::math::sqrt(self.cfg.nominal_tx_power() / p);
        let tx = self.tx_net.as_mut().expect("checked above");
        tx.mix.weight.iter_mut().for_each(|w| *w *= c);
        tx.mix.bias.iter_mut().for_each(|w| *w *= c);
        Ok(c)
    }

    /// Time-domain samples of one frame.
    pub fn transmit(&self, bits: &[u8]) -> Result<ComplexVec> {
        self.check_nets()?;
        match self.kind {
            VariantKind::DlTransceiver => {
                let rows = self.tx_net()?.forward(&self.grid_rows(bits)?)?;
                Ok(rows_to_samples(&rows))
            }
            _ => conventional_tx(bits, &self.cfg),
        }
    }

    /// Output of the receive-side DFT stage as rows `[2F, S]`.
    pub fn receive_rows(&self, samples: &ComplexVec) -> Result<RealTensor> {
        let cfg = &self.cfg;
        if samples.len() != cfg.samples_per_frame() {
            return Err(Error::LengthMismatch {
                expected: cfg.samples_per_frame(),
                got: samples.len(),
            });
        }
        let rows = samples_to_rows(samples, cfg.syms_per_frame, cfg.sym_len())?;
        self.rx_net()?.forward(&rows)
    }

    /// Frequency grid before demodulation: the conventional FFT grid, or the
    /// first `N` outputs of every RX DFT-Net row.
    pub fn pre_demod_grid(&self, samples: &ComplexVec) -> Result<ComplexVec> {
        match self.kind {
            VariantKind::Conventional => {
                crate::ofdm::conventional_rx_grid(samples, &self.cfg, FftEngine::Float)
            }
            _ => Ok(rows_to_grid(&self.receive_rows(samples)?, self.cfg.n_fft)),
        }
    }

    /// Hard bits (and soft scores for DL variants) for a batch of frames.
    pub fn detect_batch(&self, frames: &[ComplexVec], noise_vars: &[f64]) -> Result<Vec<BitBlock>> {
        self.check_nets()?;
        if self.kind == VariantKind::Conventional {
            return frames
                .iter()
                .zip(noise_vars)
                .map(|(y, &nv)| conventional_rx(y, &self.cfg, nv, FftEngine::Float))
                .collect();
        }
        let cfg = &self.cfg;
        let (syms, s) = (cfg.syms_per_frame, cfg.sym_len());
        let mut rows = Vec::with_capacity(frames.len() * 2 * syms * s);
        for y in frames {
            if y.len() != cfg.samples_per_frame() {
                return Err(Error::LengthMismatch {
                    expected: cfg.samples_per_frame(),
                    got: y.len(),
                });
            }
            rows.extend(samples_to_rows(y, syms, s)?.into_data());
        }
        let rows = RealTensor::new(&[frames.len() * 2 * syms, s], rows)?;
        let feat = self.rx_net()?.forward(&rows)?;
        let x = rows_to_frame_channels(&feat, frames.len())?;
        let scores = self.demod_net()?.forward(&x)?;
        let per = 2 * cfg.bits_per_frame();
        scores
            .data()
            .chunks_exact(per)
            .map(|p| BitBlock::with_soft(hard_decisions(p), p.to_vec()))
            .collect()
    }

    /// Every trainable array and BN statistic, prefixed by network role.
    pub fn export(&self) -> Vec<NamedArray> {
        let mut out = Vec::new();
        if let Some(n) = &self.tx_net {
            n.export("tx", &mut out);
        }
        if let Some(n) = &self.rx_net {
            n.export("rx", &mut out);
        }
        if let Some(n) = &self.demod_net {
            n.export("demod", &mut out);
        }
        out
    }

    pub fn import(
        kind: VariantKind,
        cfg: FrameConfig,
        demod: DemodVariant,
        store: &ArrayStore,
    ) -> Result<Self> {
        if kind == VariantKind::Conventional {
            return Ok(Self::conventional(cfg));
        }
        let s = cfg.sym_len();
        let tx_net = if kind == VariantKind::DlTransceiver {
            Some(DftNetParams::import("tx", store, s, Direction::Inverse)?)
        } else {
            None
        };
        let rx_net = Some(DftNetParams::import("rx", store, s, Direction::Forward)?);
        let demod_net = Some(DemodNetParams::import(
            "demod",
            store,
            demod,
            cfg.syms_per_frame * s,
            cfg.bits_per_frame(),
        )?);
        Ok(Self {
            kind,
            cfg,
            tx_net,
            rx_net,
            demod_net,
        })
    }
}

/// One frame through the whole link at `snr_db`; noise from `seed`.
pub fn run_variant(v: &SystemVariant, bits: &[u8], snr_db: f64, seed: u64) -> Result<BitBlock> {
    let mut rng = SimRng::new(seed);
    let mut out = run_variant_batch(v, &[bits.to_vec()], snr_db, &mut rng)?;
    Ok(out.remove(0))
}

/// Several frames at the same SNR, sharing one network pass.
pub fn run_variant_batch(
    v: &SystemVariant,
    frames: &[Vec<u8>],
    snr_db: f64,
    rng: &mut SimRng,
) -> Result<Vec<BitBlock>> {
    let mut rx = Vec::with_capacity(frames.len());
    let mut vars = Vec::with_capacity(frames.len());
    for bits in frames {
        let tx = v.transmit(bits)?;
        let (y, nv) = awgn_with(&tx, snr_db, rng)?;
        rx.push(y);
        vars.push(nv);
    }
    v.detect_batch(&rx, &vars)
}
