//! Two-layer network parameters.
//!
//! The network is `phi(x) = sum_k a_k sigma(w_k . x)` with the cubic ramp
//! activation from [`crate::operator`]. Outer weights `a` and inner rows `w`
//! (row-major `m x d`, no biases) are kept as flat buffers; all reductions
//! over neurons and samples run in a fixed index order so that results are
//! bit-identical regardless of how many worker threads are active.

use crate::error::{CoreError, Result};

/// Network parameters: `m` outer weights and `m x d` inner weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerParams {
    dim: usize,
    pub a: Vec<f64>,
    pub w: Vec<f64>,
}

impl TwoLayerParams {
    pub fn new(dim: usize, a: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::InvalidParameter("dimension must be >= 1".into()));
        }
        if a.is_empty() || w.len() != a.len() * dim {
            return Err(CoreError::DimensionMismatch(format!(
                "expected w of length m*d = {}*{}, got {} (m = {})",
                a.len(),
                dim,
                w.len(),
                a.len()
            )));
        }
        Ok(Self { dim, a, w })
    }

    pub fn zeros(width: usize, dim: usize) -> Result<Self> {
        Self::new(dim, vec![0.0; width], vec![0.0; width * dim])
    }

    pub fn width(&self) -> usize {
        self.a.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn w_row(&self, k: usize) -> &[f64] {
        &self.w[k * self.dim..(k + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().chain(self.w.iter()).all(|v| v.is_finite())
    }

    /// The cubic rescaling `(a, w) -> (a / s^3, s w)`, which leaves the
    /// network function, its operator image, and the path norm unchanged.
    pub fn homogeneous_rescale(&self, s: f64) -> Self {
        let s3 = s * s * s;
        Self {
            dim: self.dim,
            a: self.a.iter().map(|ak| ak / s3).collect(),
            w: self.w.iter().map(|wk| wk * s).collect(),
        }
    }

    /// Largest entrywise deviation from `other`: `(max |da|, max ||dw||_inf)`.
    pub fn max_deviation(&self, other: &Self) -> (f64, f64) {
        let da = self
            .a
            .iter()
            .zip(&other.a)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0_f64, f64::max);
        let dw = self
            .w
            .iter()
            .zip(&other.w)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0_f64, f64::max);
        (da, dw)
    }
}

/// Gradient with the same shape as [`TwoLayerParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct RiskGradient {
    pub a: Vec<f64>,
    pub w: Vec<f64>,
}

impl RiskGradient {
    pub fn zeros(width: usize, dim: usize) -> Self {
        Self { a: vec![0.0; width], w: vec![0.0; width * dim] }
    }

    pub fn norm_sq(&self) -> f64 {
        let sa: f64 = self.a.iter().map(|v| v * v).sum();
        let sw: f64 = self.w.iter().map(|v| v * v).sum();
        sa + sw
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(self.w.iter()).all(|&v| v == 0.0)
    }

    /// `self += other` entrywise.
    pub fn add_assign(&mut self, other: &RiskGradient) {
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += y;
        }
        for (x, y) in self.w.iter_mut().zip(&other.w) {
            *x += y;
        }
    }
}
