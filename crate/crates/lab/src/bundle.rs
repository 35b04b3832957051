//! On-disk parameter bundles: a directory holding `manifest.json` and one
//! raw little-endian `.bin` file per array. Every file is listed in the
//! manifest with its SHA-256 so corruption is caught on load.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ofdm_nn_core::deploy::{QDemodLinear, QuantizedGraph, RequantFactor};
use ofdm_nn_core::models::{DemodVariant, SystemVariant, TrainConfig, Trainer, VariantKind};
use ofdm_nn_core::ofdm::FrameConfig;
use ofdm_nn_core::params::{ArrayData, ArrayStore, NamedArray};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, LabError, LabResult};

pub const FORMAT: &str = "ofdm-nn-bundle";
pub const VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BundleKind {
    /// Trained floating-point model.
    Model,
    /// Model plus optimizer state for resuming.
    Checkpoint,
    /// Floating-point model plus its INT8 graph and requant registers.
    Quantized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub dtype: String,
    pub shape: Vec<usize>,
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub kind: BundleKind,
    pub variant: VariantKind,
    pub demod_variant: u8,
    pub frame: FrameConfig,
    pub config_hash: String,
    pub arrays: Vec<ArrayEntry>,
    #[serde(default)]
    pub registers: BTreeMap<String, RequantFactor>,
}

impl Manifest {
    pub fn new(kind: BundleKind, v: &SystemVariant, config_hash: &str) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            kind,
            variant: v.kind,
            demod_variant: v.demod_variant().map_or(0, DemodVariant::index),
            frame: v.cfg.clone(),
            config_hash: config_hash.into(),
            arrays: Vec::new(),
            registers: BTreeMap::new(),
        }
    }
}

fn encode(data: &ArrayData) -> Vec<u8> {
    match data {
        ArrayData::F64(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
        ArrayData::I8(v) => v.iter().map(|&x| x as u8).collect(),
        ArrayData::I16(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
    }
}

fn decode(dtype: &str, bytes: &[u8]) -> Option<ArrayData> {
    match dtype {
        "f64" if bytes.len() % 8 == 0 => Some(ArrayData::F64(
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect(),
        )),
        "i8" => Some(ArrayData::I8(bytes.iter().map(|&b| b as i8).collect())),
        "i16" if bytes.len() % 2 == 0 => Some(ArrayData::I16(
            bytes
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]))
                .collect(),
        )),
        _ => None,
    }
}

fn bundle_err(dir: &Path, msg: impl Into<String>) -> LabError {
    LabError::Bundle {
        path: dir.to_path_buf(),
        msg: msg.into(),
    }
}

/// Writes `arrays` under `dir` and the manifest last. Arrays are stored in
/// name order so identical inputs give identical bytes.
pub fn write_bundle(dir: &Path, mut manifest: Manifest, arrays: &[NamedArray]) -> LabResult<Manifest> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut sorted: Vec<&NamedArray> = arrays.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    manifest.arrays.clear();
    for a in sorted {
        if a.shape.iter().product::<usize>() != a.data.len() {
            return Err(bundle_err(dir, format!("array `{}` shape {:?} does not match its length", a.name, a.shape)));
        }
        let bytes = encode(&a.data);
        let file = format!("{}.bin", a.name);
        let path = dir.join(&file);
        fs::write(&path, &bytes).map_err(io_err(&path))?;
        manifest.arrays.push(ArrayEntry {
            name: a.name.clone(),
            dtype: a.data.dtype().into(),
            shape: a.shape.clone(),
            file,
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    let path = dir.join(MANIFEST);
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(&path, json).map_err(io_err(&path))?;
    Ok(manifest)
}

/// Loads and integrity-checks a bundle.
pub fn read_bundle(dir: &Path) -> LabResult<(Manifest, ArrayStore)> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format != FORMAT || manifest.version != VERSION {
        return Err(bundle_err(
            dir,
            format!("unsupported format {} v{}", manifest.format, manifest.version),
        ));
    }
    let mut store = ArrayStore::default();
    for e in &manifest.arrays {
        if e.file.contains('/') || e.file.contains('\\') || e.file.starts_with('.') {
            return Err(bundle_err(dir, format!("suspicious file name `{}`", e.file)));
        }
        let p = dir.join(&e.file);
        let bytes = fs::read(&p).map_err(io_err(&p))?;
        if bytes.len() != e.bytes || hex::encode(Sha256::digest(&bytes)) != e.sha256 {
            return Err(bundle_err(dir, format!("checksum mismatch for `{}`", e.name)));
        }
        let data = decode(&e.dtype, &bytes)
            .ok_or_else(|| bundle_err(dir, format!("bad dtype `{}` for `{}`", e.dtype, e.name)))?;
        if e.shape.iter().product::<usize>() != data.len() {
            return Err(bundle_err(dir, format!("shape mismatch for `{}`", e.name)));
        }
        store.insert(NamedArray {
            name: e.name.clone(),
            shape: e.shape.clone(),
            data,
        });
    }
    Ok((manifest, store))
}

fn variant_from(manifest: &Manifest, store: &ArrayStore) -> LabResult<SystemVariant> {
    manifest.frame.validate()?;
    if manifest.variant == VariantKind::Conventional {
        return Ok(SystemVariant::conventional(manifest.frame.clone()));
    }
    let demod = DemodVariant::from_index(manifest.demod_variant)?;
    Ok(SystemVariant::import(manifest.variant, manifest.frame.clone(), demod, store)?)
}

fn expect_kind(dir: &Path, m: &Manifest, kinds: &[BundleKind]) -> LabResult<()> {
    if kinds.contains(&m.kind) {
        Ok(())
    } else {
        Err(bundle_err(dir, format!("expected a {kinds:?} bundle, found {:?}", m.kind)))
    }
}

pub fn save_model(dir: &Path, v: &SystemVariant, config_hash: &str) -> LabResult<Manifest> {
    write_bundle(dir, Manifest::new(BundleKind::Model, v, config_hash), &v.export())
}

/// Loads the floating-point model from a model, checkpoint or quantized bundle.
pub fn load_model(dir: &Path) -> LabResult<(Manifest, SystemVariant)> {
    let (m, store) = read_bundle(dir)?;
    let v = variant_from(&m, &store)?;
    Ok((m, v))
}

pub fn save_checkpoint(dir: &Path, t: &Trainer, config_hash: &str) -> LabResult<Manifest> {
    write_bundle(
        dir,
        Manifest::new(BundleKind::Checkpoint, &t.variant, config_hash),
        &t.export_state(),
    )
}

pub fn load_checkpoint(dir: &Path, tc: TrainConfig) -> LabResult<(Manifest, Trainer)> {
    let (m, store) = read_bundle(dir)?;
    expect_kind(dir, &m, &[BundleKind::Checkpoint])?;
    let v = variant_from(&m, &store)?;
    let t = Trainer::resume(v, tc, &store)?;
    Ok((m, t))
}

/// Stores the float model (the transmitter still runs in floating point)
/// together with the INT8 receiver graph and its register table.
pub fn save_quantized(dir: &Path, v: &SystemVariant, g: &QuantizedGraph, config_hash: &str) -> LabResult<Manifest> {
    let mut m = Manifest::new(BundleKind::Quantized, v, config_hash);
    m.registers = g.registers().into_iter().collect();
    let mut arrays = v.export();
    arrays.extend(g.export());
    write_bundle(dir, m, &arrays)
}

pub fn load_quantized(dir: &Path) -> LabResult<(Manifest, SystemVariant, QuantizedGraph)> {
    let (m, store) = read_bundle(dir)?;
    expect_kind(dir, &m, &[BundleKind::Quantized])?;
    let v = variant_from(&m, &store)?;
    let demod = match v.demod_variant() {
        None => None,
        Some(d) => Some((
            d == DemodVariant::Joint,
            v.cfg.syms_per_frame * v.cfg.sym_len(),
            v.cfg.bits_per_frame(),
        )),
    };
    let g = QuantizedGraph::import(&store, &m.registers, v.cfg.sym_len(), demod)?;
    if let Some(q) = &g.demod {
        let joint = matches!(q.linear, QDemodLinear::Joint(_));
        if joint != (v.demod_variant() == Some(DemodVariant::Joint)) {
            return Err(bundle_err(dir, "demod layout disagrees with the manifest"));
        }
    }
    Ok((m, v, g))
}

/// `dir` exists and holds a manifest.
pub fn is_bundle(dir: &Path) -> bool {
    dir.join(MANIFEST).is_file()
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(MANIFEST)
}
