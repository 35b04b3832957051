//! Markdown summary of merged BER records.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::stats::snr_at_ber;
use crate::sweep::{Arithmetic, BerRecord};

/// CSV header of [`BerRecord`], in field order.
pub const BER_HEADER: &[&str] = &[
    "variant",
    "modulation",
    "arithmetic",
    "snr_db",
    "bits",
    "errors",
    "ber",
    "ci_low",
    "ci_high",
    "capped",
    "seed",
    "config_hash",
];

/// BER targets at which curve crossings are reported.
pub const TARGETS: [f64; 3] = [1e-1, 1e-2, 1e-3];

type CurveKey = (String, usize, Arithmetic);

fn curves(records: &[BerRecord]) -> BTreeMap<CurveKey, Vec<(f64, f64)>> {
    let mut map: BTreeMap<CurveKey, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        map.entry((r.variant.clone(), r.modulation, r.arithmetic))
            .or_default()
            .push((r.snr_db, r.ber));
    }
    for pts in map.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    map
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.2}"))
}

/// One table of SNR crossings per curve, with the gap to the floating-point
/// conventional receiver at the same modulation (positive = better).
pub fn render_report(records: &[BerRecord]) -> String {
    let mut s = String::from("# BER report\n\n");
    if records.is_empty() {
        s.push_str("No BER records.\n");
        return s;
    }
    let map = curves(records);
    s.push_str("| variant | modulation | arithmetic | points |");
    for t in TARGETS {
        let _ = write!(s, " SNR@{t:.0e} | gain@{t:.0e} |");
    }
    s.push_str("\n|---|---|---|---|");
    s.push_str(&"---|---|".repeat(TARGETS.len()));
    s.push('\n');
    for ((variant, m, arith), pts) in &map {
        let reference = map.get(&("conventional".to_string(), *m, Arithmetic::Fp));
        let _ = write!(s, "| {variant} | {m} | {arith} | {} |", pts.len());
        for t in TARGETS {
            let at = snr_at_ber(pts, t);
            let gain = match (at, reference.and_then(|r| snr_at_ber(r, t))) {
                (Some(a), Some(r)) => Some(r - a),
                _ => None,
            };
            let _ = write!(s, " {} | {} |", fmt_opt(at), fmt_opt(gain));
        }
        s.push('\n');
    }
    let capped = records.iter().filter(|r| r.capped).count();
    if capped > 0 {
        let _ = writeln!(s, "\n{capped} point(s) hit the bit cap before the error target.");
    }
    s
}
