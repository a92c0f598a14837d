//! Problem data: coefficient fields, right-hand sides, and sample sets.
//!
//! A problem is the non-divergence-form operator
//!
//! ```text
//! L u = sum_{ab} A_ab(x) d2u/dx_a dx_b + sum_a b_a(x) du/dx_a + c(x) u
//! ```
//!
//! on the unit cube, together with a right-hand side `f`. `A` must be
//! symmetric and all coefficient entries bounded by a declared constant
//! `M >= 1`; since coefficients are arbitrary callables, both conditions are
//! checked lazily at every evaluation point rather than at construction.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::expr::Expr;

type MatFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type VecFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Coefficient evaluations at one point: `a` is the d x d matrix row-major,
/// `b` the first-order coefficient vector, `c` the zeroth-order scalar.
#[derive(Debug, Clone)]
pub struct PointCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl PointCoefficients {
    /// Quadratic form `w' A w`.
    pub fn quad_form(&self, w: &[f64]) -> f64 {
        let d = w.len();
        let mut acc = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.a[i * d + j] * w[j];
            }
            acc += w[i] * row;
        }
        acc
    }

    /// Matrix-vector product `A w` written into `out`.
    pub fn matvec(&self, w: &[f64], out: &mut [f64]) {
        let d = w.len();
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += self.a[i * d + j] * w[j];
            }
            out[i] = acc;
        }
    }

    /// Inner product `b . w`.
    pub fn b_dot(&self, w: &[f64]) -> f64 {
        self.b.iter().zip(w).map(|(bi, wi)| bi * wi).sum()
    }
}

/// Callable second/first/zeroth-order coefficients with a declared sup bound.
#[derive(Clone)]
pub struct CoefficientField {
    dim: usize,
    bound: f64,
    a: MatFn,
    b: VecFn,
    c: ScalarFn,
}

impl std::fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientField")
            .field("dim", &self.dim)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

impl CoefficientField {
    /// Build from raw evaluators. `a` and `b` fill row-major `d*d` and `d`
    /// slices respectively. `bound` is the declared sup-norm bound `M >= 1`.
    pub fn from_fns(dim: usize, bound: f64, a: MatFn, b: VecFn, c: ScalarFn) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(bound >= 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "coefficient bound must satisfy M >= 1, got {bound}"
            )));
        }
        Ok(Self { dim, bound, a, b, c })
    }

    /// Constant coefficients. `a_mat` is row-major d x d.
    pub fn constant(dim: usize, bound: f64, a_mat: Vec<f64>, b_vec: Vec<f64>, c: f64) -> Result<Self> {
        if a_mat.len() != dim * dim || b_vec.len() != dim {
            return Err(CoreError::DimensionMismatch(format!(
                "constant coefficients need {}x{} matrix and length-{} vector",
                dim, dim, dim
            )));
        }
        Self::from_fns(
            dim,
            bound,
            Arc::new(move |_x, out| out.copy_from_slice(&a_mat)),
            Arc::new(move |_x, out| out.copy_from_slice(&b_vec)),
            Arc::new(move |_x| c),
        )
    }

    /// The Laplacian: `A = I`, `b = 0`, `c = 0`, bound 1.
    pub fn laplacian(dim: usize) -> Self {
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            a[i * dim + i] = 1.0;
        }
        Self::constant(dim, 1.0, a, vec![0.0; dim], 0.0).expect("laplacian is always valid")
    }

    /// Build from closed-form expressions (`a_exprs` row-major d x d).
    pub fn from_exprs(
        dim: usize,
        bound: f64,
        a_exprs: Vec<Expr>,
        b_exprs: Vec<Expr>,
        c_expr: Expr,
    ) -> Result<Self> {
        if a_exprs.len() != dim * dim || b_exprs.len() != dim {
            return Err(CoreError::DimensionMismatch(format!(
                "expression coefficients need {}x{} matrix and length-{} vector",
                dim, dim, dim
            )));
        }
        for e in a_exprs.iter().chain(b_exprs.iter()).chain(std::iter::once(&c_expr)) {
            if e.max_coord() > dim {
                return Err(CoreError::DimensionMismatch(format!(
                    "expression references x{} but the problem dimension is {}",
                    e.max_coord(),
                    dim
                )));
            }
        }
        Self::from_fns(
            dim,
            bound,
            Arc::new(move |x, out| {
                for (o, e) in out.iter_mut().zip(&a_exprs) {
                    *o = e.eval(x);
                }
            }),
            Arc::new(move |x, out| {
                for (o, e) in out.iter_mut().zip(&b_exprs) {
                    *o = e.eval(x);
                }
            }),
            Arc::new(move |x| c_expr.eval(x)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Declared sup bound `M` on all coefficient entries.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Evaluate all coefficients at `x`, enforcing symmetry of `A` (to
    /// 1e-12, relative to entry size) and the declared bound.
    pub fn eval_at(&self, x: &[f64]) -> Result<PointCoefficients> {
        if x.len() != self.dim {
            return Err(CoreError::DimensionMismatch(format!(
                "point has dimension {}, field has dimension {}",
                x.len(),
                self.dim
            )));
        }
        let d = self.dim;
        let mut a = vec![0.0; d * d];
        let mut b = vec![0.0; d];
        (self.a)(x, &mut a);
        (self.b)(x, &mut b);
        let c = (self.c)(x);
        for i in 0..d {
            for j in (i + 1)..d {
                let diff = (a[i * d + j] - a[j * d + i]).abs();
                let scale = a[i * d + j].abs().max(a[j * d + i].abs()).max(1.0);
                if diff > 1e-12 * scale {
                    return Err(CoreError::AsymmetricCoefficient { i, j, diff });
                }
            }
        }
        let tol = self.bound * (1.0 + 1e-9);
        for &v in a.iter().chain(b.iter()).chain(std::iter::once(&c)) {
            if !v.is_finite() || v.abs() > tol {
                return Err(CoreError::CoefficientBound { value: v, bound: self.bound });
            }
        }
        Ok(PointCoefficients { a, b, c })
    }
}

/// Operator plus right-hand side. The standing assumption `|f| <= 1` is
/// enforced lazily against `rhs_bound` (1 for user-constructed problems;
/// operator transforms may legitimately raise it and set their own bound).
#[derive(Clone)]
pub struct PdeProblem {
    coeffs: CoefficientField,
    rhs: ScalarFn,
    rhs_bound: f64,
}

impl std::fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PdeProblem")
            .field("coeffs", &self.coeffs)
            .field("rhs_bound", &self.rhs_bound)
            .finish_non_exhaustive()
    }
}

impl PdeProblem {
    /// Standard problem with the `|f| <= 1` bound.
    pub fn new(coeffs: CoefficientField, rhs: ScalarFn) -> Self {
        Self { coeffs, rhs, rhs_bound: 1.0 }
    }

    /// Problem with an explicit rhs bound (used by operator transforms whose
    /// effective right-hand side may exceed 1).
    pub fn with_rhs_bound(coeffs: CoefficientField, rhs: ScalarFn, rhs_bound: f64) -> Self {
        Self { coeffs, rhs, rhs_bound }
    }

    pub fn coeffs(&self) -> &CoefficientField {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim
    }

    pub fn rhs_bound(&self) -> f64 {
        self.rhs_bound
    }

    /// Evaluate the right-hand side, enforcing its declared bound.
    pub fn rhs(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(CoreError::DimensionMismatch(format!(
                "point has dimension {}, problem has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        let v = (self.rhs)(x);
        if !v.is_finite() || v.abs() > self.rhs_bound * (1.0 + 1e-9) {
            return Err(CoreError::RhsBound { value: v, bound: self.rhs_bound });
        }
        Ok(v)
    }

    pub(crate) fn rhs_fn(&self) -> ScalarFn {
        Arc::clone(&self.rhs)
    }
}

/// Interior sample points in the unit cube, row-major `n x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    points: Vec<f64>,
}

impl SampleSet {
    /// Draw `n` points uniformly from `[0,1]^d` (reproducible per seed).
    pub fn uniform(n: usize, dim: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::EmptySampleSet);
        }
        if dim == 0 {
            return Err(CoreError::InvalidParameter("dimension must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<f64> = (0..n * dim).map(|_| rng.random::<f64>()).collect();
        Ok(Self { dim, points })
    }

    /// Wrap explicit points (row-major), validating the unit-cube invariant.
    pub fn from_points(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::InvalidParameter("dimension must be >= 1".into()));
        }
        if points.is_empty() || points.len() % dim != 0 {
            return Err(CoreError::DimensionMismatch(format!(
                "point buffer length {} is not a positive multiple of dim {}",
                points.len(),
                dim
            )));
        }
        for &v in &points {
            if !(0.0..=1.0).contains(&v) {
                return Err(CoreError::InvalidParameter(format!(
                    "sample coordinate {v} outside [0,1]"
                )));
            }
        }
        Ok(Self { dim, points })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Clamp every coordinate into `[lo, hi]` (used to keep augmented
    /// problems away from endpoint singularities of fractional powers).
    pub fn clamped(&self, lo: f64, hi: f64) -> Self {
        let points = self.points.iter().map(|&v| v.clamp(lo, hi)).collect();
        Self { dim: self.dim, points }
    }
}
