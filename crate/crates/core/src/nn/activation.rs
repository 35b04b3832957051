use alloc::vec::Vec;

use crate::math::exp;

/// Negative-side slope shared by training and the integer path (a shift by 3).
pub const LEAKY_SLOPE: f64 = 0.125;

pub fn leaky_relu(x: &[f64], slope: f64) -> Vec<f64> {
    x.iter().map(|&v| if v >= 0.0 { v } else { slope * v }).collect()
}

pub fn leaky_relu_backward(x: &[f64], dy: &[f64], slope: f64) -> Vec<f64> {
    x.iter()
        .zip(dy)
        .map(|(&v, &g)| if v >= 0.0 { g } else { slope * g })
        .collect()
}

pub fn sigmoid(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            if v >= 0.0 {
                1.0 / (1.0 + exp(-v))
            } else {
                let e = exp(v);
                e / (1.0 + e)
            }
        })
        .collect()
}

/// Backward through sigmoid given its output `p`.
pub fn sigmoid_backward(p: &[f64], dy: &[f64]) -> Vec<f64> {
    p.iter().zip(dy).map(|(&s, &g)| g * s * (1.0 - s)).collect()
}
