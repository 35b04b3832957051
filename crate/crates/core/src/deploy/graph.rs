use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::fuse::{FusedActivations, FusedDemodLinear, FusedReceiver};
use super::quant::{
    calibrate, derive_requant, quantize_tensor, CalibMode, QuantParams, RequantFactor,
};
use crate::math::{floor, round_even};
use crate::nn::{AffineLayer, MixConvLayer, RealTensor};
use crate::params::{ArrayData, ArrayStore, NamedArray};
use crate::{Error, Result};

/// Integer linear layer: int8 weights `out × in`, int16 bias at `S_in·S_w`.
#[derive(Debug, Clone, PartialEq)]
pub struct QLinear {
    pub name: String,
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<i8>,
    pub bias: Vec<i16>,
    pub w_scale: f64,
    pub requant: RequantFactor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QDftNet {
    pub lin_r: QLinear,
    pub lin_i: QLinear,
    /// 4 → 2 mix stored as a 4-input linear.
    pub mix: QLinear,
    pub sym_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QDemodLinear {
    Joint(QLinear),
    Split(QLinear, QLinear),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QDemod {
    pub linear: QDemodLinear,
    pub mix: QLinear,
    pub in_len: usize,
    pub dm: usize,
}

/// Activation scales at every tensor interface of the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActScales {
    pub input: QuantParams,
    /// Shared by the four linear branches `[u1..u4]`.
    pub branches: QuantParams,
    pub dft_out: QuantParams,
    /// Shared by the Demod-Net features and their LeakyReLU copy.
    pub hidden: Option<QuantParams>,
    pub scores: Option<QuantParams>,
}

/// Integer-only receiver graph.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedGraph {
    pub scales: ActScales,
    pub dft: QDftNet,
    pub demod: Option<QDemod>,
}

/// Result of an integer (or reference) forward pass over a batch of frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntOutput {
    /// DFT-Net output rows `[frames·2F, S]`.
    pub dft_out: Vec<i8>,
    /// Scores `[frames, Dm, 2]`, when the graph has a Demod-Net.
    pub scores: Option<Vec<i8>>,
    pub saturations: u64,
}

/// LeakyReLU with slope 1/8 on int8 codes: arithmetic shift for negatives.
#[inline]
pub fn leaky_shift(q: i8) -> i8 {
    if q < 0 {
        q >> 3
    } else {
        q
    }
}

fn quantize_layer(name: &str, w: &[f64], b: &[f64], in_dim: usize, out_dim: usize, s_in: f64, s_out: f64) -> Result<QLinear> {
    let wq = calibrate(w, CalibMode::MaxAbs)?;
    let s_b = s_in * wq.scale;
    let mut bias = Vec::with_capacity(b.len());
    for &v in b {
        let q = round_even(v / s_b);
        if q.abs() > i16::MAX as f64 || !q.is_finite() {
            return Err(Error::BiasOverflow {
                layer: name.into(),
                value: q,
            });
        }
        bias.push(q as i16);
    }
    Ok(QLinear {
        name: name.into(),
        in_dim,
        out_dim,
        weight: quantize_tensor(w, wq),
        bias,
        w_scale: wq.scale,
        requant: derive_requant(s_in, wq.scale, s_out)?,
    })
}

fn q_affine(name: &str, l: &AffineLayer, s_in: f64, s_out: f64) -> Result<QLinear> {
    quantize_layer(name, &l.weight, &l.bias, l.in_dim, l.out_dim, s_in, s_out)
}

fn q_mix(name: &str, l: &MixConvLayer, s_in: f64, s_out: f64) -> Result<QLinear> {
    quantize_layer(name, &l.weight, &l.bias, l.cin, l.cout, s_in, s_out)
}

fn hist(t: &RealTensor) -> Result<QuantParams> {
    calibrate(t.data(), CalibMode::Histogram)
}

/// Quantizes a fused receiver: weights by max-abs, activations by histogram
/// over the calibration activations, biases to int16 and one requantization
/// factor per layer.
pub fn build_quantized_graph(fused: &FusedReceiver, calib: &FusedActivations) -> Result<QuantizedGraph> {
    let input = hist(&calib.input)?;
    let mut both = calib.a_r.data().to_vec();
    both.extend_from_slice(calib.a_i.data());
    let branches = calibrate(&both, CalibMode::Histogram)?;
    let dft_out = hist(&calib.dft_out)?;
    let dft = QDftNet {
        lin_r: q_affine("dft.lin_r", &fused.dft.lin_r, input.scale, branches.scale)?,
        lin_i: q_affine("dft.lin_i", &fused.dft.lin_i, input.scale, branches.scale)?,
        mix: q_mix("dft.mix", &fused.dft.mix, branches.scale, dft_out.scale)?,
        sym_len: fused.dft.sym_len(),
    };
    let (demod, hidden, scores) = match (&fused.demod, &calib.hidden, &calib.logits) {
        (Some(d), Some(h), Some(z)) => {
            let hq = hist(h)?;
            let zq = hist(z)?;
            let linear = match &d.linear {
                FusedDemodLinear::Joint(l) => {
                    QDemodLinear::Joint(q_affine("demod.lin", l, dft_out.scale, hq.scale)?)
                }
                FusedDemodLinear::Split(lr, li) => QDemodLinear::Split(
                    q_affine("demod.lin_r", lr, dft_out.scale, hq.scale)?,
                    q_affine("demod.lin_i", li, dft_out.scale, hq.scale)?,
                ),
            };
            let q = QDemod {
                linear,
                mix: q_mix("demod.mix", &d.mix, hq.scale, zq.scale)?,
                in_len: d.in_len,
                dm: d.dm,
            };
            (Some(q), Some(hq), Some(zq))
        }
        (None, _, _) => (None, None, None),
        _ => return Err(Error::Config("calibration activations lack demod tensors".into())),
    };
    Ok(QuantizedGraph {
        scales: ActScales {
            input,
            branches,
            dft_out,
            hidden,
            scores,
        },
        dft,
        demod,
    })
}

/// `acc = W·x + b` over int8 codes with 32-bit accumulation, then requantize.
#[inline]
pub fn int_dot_requant(l: &QLinear, x: &[i8], o: usize, sat: &mut u64) -> i8 {
    let w = &l.weight[o * l.in_dim..(o + 1) * l.in_dim];
    let acc: i32 = w.iter().zip(x).map(|(&a, &b)| a as i32 * b as i32).sum::<i32>() + l.bias[o] as i32;
    let (v, s) = l.requant.apply(acc);
    *sat += u64::from(s);
    v
}

fn int_linear_rows(l: &QLinear, x: &[i8], sat: &mut u64) -> Vec<i8> {
    let mut out = Vec::with_capacity(x.len() / l.in_dim * l.out_dim);
    for row in x.chunks_exact(l.in_dim) {
        for o in 0..l.out_dim {
            out.push(int_dot_requant(l, row, o, sat));
        }
    }
    out
}

/// Applies a 4 → 2 mix at every position of a `[4, len]` block.
pub fn int_mix_block(mix: &QLinear, u: [&[i8]; 4], out: [&mut [i8]; 2], sat: &mut u64) {
    let [o0, o1] = out;
    for l in 0..u[0].len() {
        let col = [u[0][l], u[1][l], u[2][l], u[3][l]];
        o0[l] = int_dot_requant(mix, &col, 0, sat);
        o1[l] = int_dot_requant(mix, &col, 1, sat);
    }
}

impl QuantizedGraph {
    pub fn sym_len(&self) -> usize {
        self.dft.sym_len
    }

    pub fn quantize_input(&self, rows: &RealTensor) -> Vec<i8> {
        quantize_tensor(rows.data(), self.scales.input)
    }

    /// `(layer name, requantization factor)` in execution order: the values
    /// the accelerator's data registers hold.
    pub fn registers(&self) -> Vec<(String, RequantFactor)> {
        self.layers().iter().map(|l| (l.name.clone(), l.requant)).collect()
    }

    pub fn layers(&self) -> Vec<&QLinear> {
        let mut v = vec![&self.dft.lin_r, &self.dft.lin_i, &self.dft.mix];
        if let Some(d) = &self.demod {
            match &d.linear {
                QDemodLinear::Joint(l) => v.push(l),
                QDemodLinear::Split(a, b) => {
                    v.push(a);
                    v.push(b);
                }
            }
            v.push(&d.mix);
        }
        v
    }

    pub fn int8_weight_bytes(&self) -> usize {
        self.layers()
            .iter()
            .map(|l| l.weight.len() + 2 * l.bias.len())
            .sum()
    }

    /// Size of the same parameters stored as 32-bit reals.
    pub fn f32_weight_bytes(&self) -> usize {
        self.layers()
            .iter()
            .map(|l| 4 * (l.weight.len() + l.bias.len()))
            .sum()
    }

    /// Integer-only forward on `frames` frames of quantized rows `[frames·2F, S]`.
    pub fn int_forward(&self, q_in: &[i8], frames: usize) -> Result<IntOutput> {
        let s = self.sym_len();
        if frames == 0 || q_in.len() % (2 * s * frames) != 0 {
            return Err(Error::Shape(format!(
                "int_forward: {} codes do not form {frames} frames of rows of {s}",
                q_in.len()
            )));
        }
        let mut sat = 0u64;
        let a_r = int_linear_rows(&self.dft.lin_r, q_in, &mut sat);
        let a_i = int_linear_rows(&self.dft.lin_i, q_in, &mut sat);
        let mut y = vec![0i8; q_in.len()];
        for (k, yk) in y.chunks_exact_mut(2 * s).enumerate() {
            let (y0, y1) = yk.split_at_mut(s);
            let r = &a_r[2 * k * s..(2 * k + 2) * s];
            let i = &a_i[2 * k * s..(2 * k + 2) * s];
            int_mix_block(&self.dft.mix, [&r[..s], &r[s..], &i[..s], &i[s..]], [y0, y1], &mut sat);
        }
        let scores = match &self.demod {
            None => None,
            Some(d) => Some(self.int_demod(d, &y, frames, &mut sat)?),
        };
        Ok(IntOutput {
            dft_out: y,
            scores,
            saturations: sat,
        })
    }

    fn int_demod(&self, d: &QDemod, y: &[i8], frames: usize, sat: &mut u64) -> Result<Vec<i8>> {
        let x = frame_channels_i8(y, frames, self.sym_len());
        let (len, dm) = (d.in_len, d.dm);
        if x.len() != frames * 2 * len {
            return Err(Error::Shape(format!("demod input length {} vs {len}", x.len() / frames / 2)));
        }
        let mut out = Vec::with_capacity(frames * 2 * dm);
        for f in x.chunks_exact(2 * len) {
            let h = match &d.linear {
                QDemodLinear::Joint(l) => int_linear_rows(l, f, sat),
                QDemodLinear::Split(lr, li) => {
                    let mut h = int_linear_rows(lr, &f[..len], sat);
                    h.extend(int_linear_rows(li, &f[len..], sat));
                    h
                }
            };
            out.extend(int_demod_head(&d.mix, &h, dm, sat));
        }
        Ok(out)
    }
}

/// LeakyReLU copy, 4 → 2 mix and transpose to `[Dm, 2]` for one frame.
pub fn int_demod_head(mix: &QLinear, h: &[i8], dm: usize, sat: &mut u64) -> Vec<i8> {
    let act: Vec<i8> = h.iter().map(|&q| leaky_shift(q)).collect();
    let mut z0 = vec![0i8; dm];
    let mut z1 = vec![0i8; dm];
    int_mix_block(mix, [&h[..dm], &h[dm..], &act[..dm], &act[dm..]], [&mut z0, &mut z1], sat);
    z0.iter().zip(&z1).flat_map(|(&a, &b)| [a, b]).collect()
}

/// Rows `[frames·2F, S]` to per-frame `[2, F·S]`, on int8 codes.
pub fn frame_channels_i8(rows: &[i8], frames: usize, s: usize) -> Vec<i8> {
    let syms = rows.len() / s / 2 / frames;
    let len = syms * s;
    let mut out = vec![0i8; rows.len()];
    for (r, row) in rows.chunks_exact(s).enumerate() {
        let (b, k, part) = (r / (2 * syms), (r / 2) % syms, r % 2);
        let at = b * 2 * len + part * len + k * s;
        out[at..at + s].copy_from_slice(row);
    }
    out
}

/// Reference forward: the same integer codes pushed through the floating
/// point layers, with `floor(acc·m/2ⁿ + 0.5)` rescaling. Integer sums stay
/// below 2⁵³, so the result must equal [`QuantizedGraph::int_forward`].
pub fn fake_quant_forward(g: &QuantizedGraph, q_in: &[i8], frames: usize) -> Result<IntOutput> {
    let s = g.sym_len();
    let as_affine = |l: &QLinear| -> Result<AffineLayer> {
        AffineLayer::new(
            l.in_dim,
            l.out_dim,
            l.weight.iter().map(|&v| v as f64).collect(),
            l.bias.iter().map(|&v| v as f64).collect(),
        )
    };
    let as_mix = |l: &QLinear| -> Result<MixConvLayer> {
        MixConvLayer::new(
            l.in_dim,
            l.out_dim,
            l.weight.iter().map(|&v| v as f64).collect(),
            l.bias.iter().map(|&v| v as f64).collect(),
        )
    };
    let mut sat = 0u64;
    let mut rescale = |acc: &[f64], rq: RequantFactor| -> Vec<f64> {
        acc.iter()
            .map(|&a| {
                let v = rq.apply_real(a);
                let raw = floor(a * rq.m as f64 / (1u64 << rq.n) as f64 + 0.5);
                sat += u64::from(raw != v);
                v
            })
            .collect()
    };
    let rows = q_in.len() / s;
    let x = RealTensor::new(&[rows, s], q_in.iter().map(|&v| v as f64).collect())?;
    let a_r = rescale(as_affine(&g.dft.lin_r)?.forward(&x)?.data(), g.dft.lin_r.requant);
    let a_i = rescale(as_affine(&g.dft.lin_i)?.forward(&x)?.data(), g.dft.lin_i.requant);
    let syms = rows / 2;
    let mut u = Vec::with_capacity(4 * syms * s);
    for k in 0..syms {
        u.extend_from_slice(&a_r[2 * k * s..(2 * k + 2) * s]);
        u.extend_from_slice(&a_i[2 * k * s..(2 * k + 2) * s]);
    }
    let acc = as_mix(&g.dft.mix)?.forward(&RealTensor::new(&[syms, 4, s], u)?)?;
    let y = rescale(acc.data(), g.dft.mix.requant);
    let y_i8: Vec<i8> = y.iter().map(|&v| v as i8).collect();
    let scores = match &g.demod {
        None => None,
        Some(d) => {
            let (len, dm) = (d.in_len, d.dm);
            let xf: Vec<f64> = frame_channels_i8(&y_i8, frames, s).iter().map(|&v| v as f64).collect();
            let h: Vec<f64> = match &d.linear {
                QDemodLinear::Joint(l) => {
                    let t = RealTensor::new(&[frames, 2 * len], xf)?;
                    rescale(as_affine(l)?.forward(&t)?.data(), l.requant)
                }
                QDemodLinear::Split(lr, li) => {
                    let mut re = Vec::with_capacity(frames * len);
                    let mut im = Vec::with_capacity(frames * len);
                    for blk in xf.chunks_exact(2 * len) {
                        re.extend_from_slice(&blk[..len]);
                        im.extend_from_slice(&blk[len..]);
                    }
                    let hr = rescale(as_affine(lr)?.forward(&RealTensor::new(&[frames, len], re)?)?.data(), lr.requant);
                    let hi = rescale(as_affine(li)?.forward(&RealTensor::new(&[frames, len], im)?)?.data(), li.requant);
                    hr.chunks_exact(dm)
                        .zip(hi.chunks_exact(dm))
                        .flat_map(|(a, b)| a.iter().chain(b).copied())
                        .collect()
                }
            };
            let mut u = Vec::with_capacity(frames * 4 * dm);
            for blk in h.chunks_exact(2 * dm) {
                u.extend_from_slice(blk);
                u.extend(blk.iter().map(|&v| if v < 0.0 { floor(v * 0.125) } else { v }));
            }
            let z = as_mix(&d.mix)?.forward(&RealTensor::new(&[frames, 4, dm], u)?)?;
            let z = rescale(z.data(), d.mix.requant);
            let mut out = Vec::with_capacity(z.len());
            for f in z.chunks_exact(2 * dm) {
                for i in 0..dm {
                    out.push(f[i] as i8);
                    out.push(f[dm + i] as i8);
                }
            }
            Some(out)
        }
    };
    Ok(IntOutput {
        dft_out: y_i8,
        scores,
        saturations: sat,
    })
}

// --- bundle form ---------------------------------------------------------

fn push_layer(l: &QLinear, out: &mut Vec<NamedArray>) {
    out.push(NamedArray {
        name: format!("q.{}.weight", l.name),
        shape: vec![l.out_dim, l.in_dim],
        data: ArrayData::I8(l.weight.clone()),
    });
    out.push(NamedArray {
        name: format!("q.{}.bias", l.name),
        shape: vec![l.out_dim],
        data: ArrayData::I16(l.bias.clone()),
    });
    out.push(NamedArray::f64(format!("q.{}.w_scale", l.name), &[1], &[l.w_scale]));
}

fn read_layer(
    name: &str,
    in_dim: usize,
    out_dim: usize,
    store: &ArrayStore,
    regs: &BTreeMap<String, RequantFactor>,
) -> Result<QLinear> {
    Ok(QLinear {
        name: name.into(),
        in_dim,
        out_dim,
        weight: store.i8(&format!("q.{name}.weight"), in_dim * out_dim)?,
        bias: store.i16(&format!("q.{name}.bias"), out_dim)?,
        w_scale: store.f64(&format!("q.{name}.w_scale"), 1)?[0],
        requant: *regs
            .get(name)
            .ok_or_else(|| Error::Bundle(format!("no register entry for layer `{name}`")))?,
    })
}

impl QuantizedGraph {
    /// Raw arrays; the requantization registers come from [`Self::registers`].
    pub fn export(&self) -> Vec<NamedArray> {
        let mut out = Vec::new();
        for l in self.layers() {
            push_layer(l, &mut out);
        }
        let sc = &self.scales;
        let mut scales = vec![sc.input.scale, sc.branches.scale, sc.dft_out.scale];
        if let (Some(h), Some(z)) = (sc.hidden, sc.scores) {
            scales.push(h.scale);
            scales.push(z.scale);
        }
        out.push(NamedArray::f64("q.act_scales", &[scales.len()], &scales));
        out
    }

    /// Rebuilds a graph from its arrays and register table. `demod` is
    /// `(joint?, in_len, dm)` when a Demod-Net is present.
    pub fn import(
        store: &ArrayStore,
        regs: &BTreeMap<String, RequantFactor>,
        sym_len: usize,
        demod: Option<(bool, usize, usize)>,
    ) -> Result<Self> {
        let s = sym_len;
        let dft = QDftNet {
            lin_r: read_layer("dft.lin_r", s, s, store, regs)?,
            lin_i: read_layer("dft.lin_i", s, s, store, regs)?,
            mix: read_layer("dft.mix", 4, 2, store, regs)?,
            sym_len: s,
        };
        let n_scales = if demod.is_some() { 5 } else { 3 };
        let sc = store.f64("q.act_scales", n_scales)?;
        let q = |i: usize| QuantParams::new(sc[i]);
        let demod_graph = match demod {
            None => None,
            Some((joint, len, dm)) => Some(QDemod {
                linear: if joint {
                    QDemodLinear::Joint(read_layer("demod.lin", 2 * len, 2 * dm, store, regs)?)
                } else {
                    QDemodLinear::Split(
                        read_layer("demod.lin_r", len, dm, store, regs)?,
                        read_layer("demod.lin_i", len, dm, store, regs)?,
                    )
                },
                mix: read_layer("demod.mix", 4, 2, store, regs)?,
                in_len: len,
                dm,
            }),
        };
        Ok(Self {
            scales: ActScales {
                input: q(0)?,
                branches: q(1)?,
                dft_out: q(2)?,
                hidden: if demod.is_some() { Some(q(3)?) } else { None },
                scores: if demod.is_some() { Some(q(4)?) } else { None },
            },
            dft,
            demod: demod_graph,
        })
    }
}
