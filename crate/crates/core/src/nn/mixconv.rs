use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Parameters, RealTensor};
use crate::{Error, Result};

/// Kernel-length-1 channel mixing: `y[:, o, l] = Σ_i M[o, i] x[:, i, l] + b[o]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixConvLayer {
    pub cin: usize,
    pub cout: usize,
    /// Row-major `cout × cin`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixConvGrads {
    pub dx: RealTensor,
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

/// Forward DFT pattern: `(u1 + u4, u2 - u3)`.
pub(crate) const FORWARD_PATTERN: [f64; 8] = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0, -1.0, 0.0];
/// Inverse DFT pattern: `(u1 - u4, u2 + u3)`.
pub(crate) const INVERSE_PATTERN: [f64; 8] = [1.0, 0.0, 0.0, -1.0, 0.0, 1.0, 1.0, 0.0];

impl MixConvLayer {
    pub fn new(cin: usize, cout: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weight.len() != cin * cout || bias.len() != cout {
            return Err(Error::Shape(format!(
                "mixconv {cout}x{cin}: weight has {}, bias has {}",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Self {
            cin,
            cout,
            weight,
            bias,
        })
    }

    pub fn forward_dft() -> Self {
        Self::new(4, 2, FORWARD_PATTERN.to_vec(), vec![0.0; 2]).expect("static shape")
    }

    pub fn inverse_dft() -> Self {
        Self::new(4, 2, INVERSE_PATTERN.to_vec(), vec![0.0; 2]).expect("static shape")
    }

    fn dims(&self, x: &RealTensor) -> Result<(usize, usize)> {
        let s = x.shape();
        if s.len() != 3 || s[1] != self.cin {
            return Err(Error::Shape(format!(
                "mixconv expects [B, {}, L], got {s:?}",
                self.cin
            )));
        }
        Ok((s[0], s[2]))
    }

    pub fn forward(&self, x: &RealTensor) -> Result<RealTensor> {
        let (b, l) = self.dims(x)?;
        let mut y = vec![0.0; b * self.cout * l];
        let xd = x.data();
        for n in 0..b {
            let xb = &xd[n * self.cin * l..(n + 1) * self.cin * l];
            let yb = &mut y[n * self.cout * l..(n + 1) * self.cout * l];
            for o in 0..self.cout {
                let yo = &mut yb[o * l..(o + 1) * l];
                yo.iter_mut().for_each(|v| *v = self.bias[o]);
                for i in 0..self.cin {
                    let w = self.weight[o * self.cin + i];
                    if w == 0.0 {
                        continue;
                    }
                    for (v, xi) in yo.iter_mut().zip(&xb[i * l..(i + 1) * l]) {
                        *v += w * xi;
                    }
                }
            }
        }
        RealTensor::new(&[b, self.cout, l], y)
    }

    pub fn backward(&self, x: &RealTensor, dy: &RealTensor) -> Result<MixConvGrads> {
        let (b, l) = self.dims(x)?;
        if dy.shape() != [b, self.cout, l] {
            return Err(Error::Shape(format!(
                "mixconv backward: dy shape {:?}",
                dy.shape()
            )));
        }
        let (xd, gd) = (x.data(), dy.data());
        let mut dx = vec![0.0; xd.len()];
        let mut dw = vec![0.0; self.weight.len()];
        let mut db = vec![0.0; self.cout];
        for n in 0..b {
            let xb = &xd[n * self.cin * l..(n + 1) * self.cin * l];
            let gb = &gd[n * self.cout * l..(n + 1) * self.cout * l];
            let dxb = &mut dx[n * self.cin * l..(n + 1) * self.cin * l];
            for o in 0..self.cout {
                let go = &gb[o * l..(o + 1) * l];
                db[o] += go.iter().sum::<f64>();
                for i in 0..self.cin {
                    let xi = &xb[i * l..(i + 1) * l];
                    dw[o * self.cin + i] += go.iter().zip(xi).map(|(g, v)| g * v).sum::<f64>();
                    let w = self.weight[o * self.cin + i];
                    for (d, g) in dxb[i * l..(i + 1) * l].iter_mut().zip(go) {
                        *d += w * g;
                    }
                }
            }
        }
        Ok(MixConvGrads {
            dx: RealTensor::new(x.shape(), dx)?,
            dw,
            db,
        })
    }
}

impl Parameters for MixConvLayer {
    fn params(&self) -> Vec<&[f64]> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weight, &mut self.bias]
    }
}
