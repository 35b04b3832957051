use alloc::vec::Vec;

use super::activation::sigmoid;
use crate::math::ln;

/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` before the log.
pub const BCE_CLAMP: f64 = 1e-7;

fn clamp(p: f64) -> f64 {
    p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP)
}

/// Mean elementwise binary cross-entropy on probabilities, with its gradient
/// with respect to `p` (zero where the clamp is active).
pub fn bce_loss(p: &[f64], t: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(p.len(), t.len(), "bce: length mismatch");
    let n = p.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(p.len());
    for (&pi, &ti) in p.iter().zip(t) {
        let c = clamp(pi);
        loss -= ti * ln(c) + (1.0 - ti) * ln(1.0 - c);
        let active = pi > BCE_CLAMP && pi < 1.0 - BCE_CLAMP;
        grad.push(if active { (c - ti) / (c * (1.0 - c)) / n } else { 0.0 });
    }
    (loss / n, grad)
}

/// BCE of `sigmoid(z)` against `t`, returning the loss and the gradient with
/// respect to the logits. The gradient uses the fused form `(σ(z) - t) / n`,
/// which never vanishes under saturation.
pub fn bce_with_logits(z: &[f64], t: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(z.len(), t.len(), "bce: length mismatch");
    let p = sigmoid(z);
    let (loss, _) = bce_loss(&p, t);
    let n = z.len() as f64;
    let grad = p.iter().zip(t).map(|(pi, ti)| (pi - ti) / n).collect();
    (loss, grad)
}
