//! Minimal dense layers with exact analytic gradients.
//!
//! Every layer works on row-major `f64` buffers; the feature dimension is the
//! last axis unless noted. Forward passes are deterministic: matrix products
//! go through a single-threaded GEMM with a fixed blocking order.

mod activation;
mod adam;
mod affine;
mod batchnorm;
pub mod gemm;
mod loss;
mod mixconv;
mod tensor;

pub use activation::{
    leaky_relu, leaky_relu_backward, sigmoid, sigmoid_backward, LEAKY_SLOPE,
};
pub use adam::{AdamConfig, AdamState};
pub use affine::{AffineGrads, AffineLayer};
pub use batchnorm::{BatchNormLayer, BnCache, BnGrads, BnMode, BN_EPS, BN_MOMENTUM};
pub use loss::{bce_loss, bce_with_logits, BCE_CLAMP};
pub use mixconv::{MixConvGrads, MixConvLayer};
pub use tensor::RealTensor;

use alloc::vec::Vec;

/// Anything with trainable parameter slices in a fixed order.
pub trait Parameters {
    fn params(&self) -> Vec<&[f64]>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}
