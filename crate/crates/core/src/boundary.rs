//! Boundary-condition-enforcing network augmentations (one-dimensional) and
//! the induced operator transform.
//!
//! Instead of penalizing boundary mismatch, the solution ansatz is rebuilt so
//! the conditions hold for *every* parameter value:
//!
//! ```text
//! phi(x; theta) = h1(x) phi~(x; theta) + h2(x)
//! ```
//!
//! where `h1` vanishes (to the right order) on the boundary and `h2` carries
//! the boundary data. Substituting into `L u = f` turns the problem for `phi`
//! into an equivalent interior problem for the free network `phi~`:
//!
//! ```text
//! A~ = A h1,   b~_a = b_a h1 + 2 (A grad h1)_a,
//! c~ = sum_ab A_ab d2h1/dx_a dx_b + sum_a b_a dh1/dx_a + c h1,
//! f~ = f - L h2,
//! ```
//!
//! so that `L(h1 phi~ + h2) - f = L~ phi~ - f~` pointwise. Three endpoint
//! cases are provided on an interval `[a, b]`:
//!
//! * **Dirichlet** (`phi(a)=a0, phi(b)=b0`): `h1=(x-a)^{pa}(x-b)^{pb}` with
//!   `0 < pa, pb <= 1`, `h2` the affine interpolant.
//! * **Mixed** (`phi'(a)=a0, phi(b)=b0`): `h1=(x-a)^{pa}` with `1 < pa <= 2`;
//!   `h2 = -(b-a)^{pa} phi~(b;theta) + a0 x + b0 - a0 b` couples to the
//!   network through the constant `phi~(b;theta)`, and the training gradient
//!   keeps that dependence exactly.
//! * **Neumann** (`phi'(a)=a0, phi'(b)=b0`): with `E=exp(pa x/(a-b))`,
//!   `P=(x-a)^{pa}`, `Q=(x-b)^{pb}`, `1 < pa, pb <= 2`,
//!   `phi = E P Q phi~ + c2 E P + K0 + c1` where
//!   `K0=(b0-a0)(x-a)^2/(2(b-a)) + a0 x`; the scalars `c1, c2` span the two
//!   flux-neutral directions and train alongside `theta`.
//!
//! Fractional exponents are legal but make `h1` derivatives singular at the
//! endpoints; [`TransformedProblem::sample_bounds`] then prescribes clamping
//! samples to `[a+1e-6, b-1e-6]`. Time-dependent problems reduce to this
//! elliptic setting through [`lift_time_dependent`], which appends normalized
//! time `t/T` as an extra coordinate.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::operator::{eval_l_phi_at, eval_phi};
use crate::params::TwoLayerParams;
use crate::problem::{CoefficientField, PdeProblem, PointCoefficients, SampleSet};

/// Default Dirichlet exponents (`h1` affine per factor).
pub const DEFAULT_DIRICHLET_EXPONENT: f64 = 1.0;
/// Default mixed-condition exponent.
pub const DEFAULT_MIXED_EXPONENT: f64 = 2.0;
/// Default Neumann exponents.
pub const DEFAULT_NEUMANN_EXPONENT: f64 = 2.0;

const ENDPOINT_MARGIN: f64 = 1e-6;
const BOUND_SCAN_POINTS: usize = 2001;

/// `y^p` read as the ordinary power for integer `p` and as the signed power
/// `sign(y) |y|^p` otherwise (the real-valued branch for negative bases).
fn pv(y: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p.fract() == 0.0 {
        y.powi(p as i32)
    } else if y == 0.0 {
        0.0
    } else {
        y.signum() * y.abs().powf(p)
    }
}

/// First derivative of `pv(., p)`.
fn pd1(y: f64, p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if p.fract() == 0.0 {
        p * y.powi(p as i32 - 1)
    } else {
        p * y.abs().powf(p - 1.0)
    }
}

/// Second derivative of `pv(., p)`.
fn pd2(y: f64, p: f64) -> f64 {
    if p == 0.0 || p == 1.0 {
        0.0
    } else if p.fract() == 0.0 {
        p * (p - 1.0) * y.powi(p as i32 - 2)
    } else if y == 0.0 {
        0.0
    } else {
        p * (p - 1.0) * y.signum() * y.abs().powf(p - 2.0)
    }
}

/// Which endpoint conditions the augmentation enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentationKind {
    /// `h1 = 1`, `h2 = 0`: no conditions, transform is the identity.
    Identity,
    /// Values pinned at both endpoints.
    Dirichlet,
    /// Derivative pinned at `a`, value pinned at `b`.
    Mixed,
    /// Derivatives pinned at both endpoints.
    Neumann,
}

/// The multiplicative/additive pair `(h1, h2)` enforcing endpoint conditions,
/// with analytic derivatives for the operator transform.
#[derive(Debug, Clone)]
pub struct BoundaryAugmentation {
    kind: AugmentationKind,
    a: f64,
    b: f64,
    a0: f64,
    b0: f64,
    pa: f64,
    pb: f64,
    /// Trainable constant shift (Neumann only).
    pub c1: f64,
    /// Trainable coefficient of the flux-neutral profile `E P` (Neumann only).
    pub c2: f64,
}

impl BoundaryAugmentation {
    /// No-op augmentation: `phi = phi~` in any dimension.
    pub fn identity() -> Self {
        Self {
            kind: AugmentationKind::Identity,
            a: 0.0,
            b: 1.0,
            a0: 0.0,
            b0: 0.0,
            pa: 1.0,
            pb: 1.0,
            c1: 0.0,
            c2: 0.0,
        }
    }

    fn check_interval(a: f64, b: f64) -> Result<()> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "interval endpoints must satisfy a < b, got [{a}, {b}]"
            )));
        }
        Ok(())
    }

    /// Endpoint values `phi(a) = a0`, `phi(b) = b0`; exponents in `(0, 1]`.
    pub fn dirichlet(a: f64, b: f64, a0: f64, b0: f64, pa: f64, pb: f64) -> Result<Self> {
        Self::check_interval(a, b)?;
        if !(pa > 0.0 && pa <= 1.0 && pb > 0.0 && pb <= 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "endpoint-value exponents must lie in (0, 1], got pa={pa}, pb={pb}"
            )));
        }
        Ok(Self { kind: AugmentationKind::Dirichlet, a, b, a0, b0, pa, pb, c1: 0.0, c2: 0.0 })
    }

    /// Slope `phi'(a) = a0` and value `phi(b) = b0`; exponent in `(1, 2]`.
    pub fn mixed(a: f64, b: f64, a0: f64, b0: f64, pa: f64) -> Result<Self> {
        Self::check_interval(a, b)?;
        if !(pa > 1.0 && pa <= 2.0) {
            return Err(CoreError::InvalidParameter(format!(
                "mixed-condition exponent must lie in (1, 2], got pa={pa}"
            )));
        }
        Ok(Self { kind: AugmentationKind::Mixed, a, b, a0, b0, pa, pb: 1.0, c1: 0.0, c2: 0.0 })
    }

    /// Endpoint slopes `phi'(a) = a0`, `phi'(b) = b0`; exponents in `(1, 2]`.
    pub fn neumann(a: f64, b: f64, a0: f64, b0: f64, pa: f64, pb: f64) -> Result<Self> {
        Self::check_interval(a, b)?;
        if !(pa > 1.0 && pa <= 2.0 && pb > 1.0 && pb <= 2.0) {
            return Err(CoreError::InvalidParameter(format!(
                "endpoint-slope exponents must lie in (1, 2], got pa={pa}, pb={pb}"
            )));
        }
        Ok(Self { kind: AugmentationKind::Neumann, a, b, a0, b0, pa, pb, c1: 0.0, c2: 0.0 })
    }

    /// Set the trainable Neumann scalars.
    pub fn with_extras(mut self, c1: f64, c2: f64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self
    }

    pub fn kind(&self) -> AugmentationKind {
        self.kind
    }

    /// Interval endpoints `(a, b)`.
    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Boundary data `(a0, b0)`.
    pub fn data(&self) -> (f64, f64) {
        (self.a0, self.b0)
    }

    /// Exponents `(pa, pb)` (`pb` unused for the mixed case).
    pub fn exponents(&self) -> (f64, f64) {
        (self.pa, self.pb)
    }

    /// Whether any active exponent is fractional, making `h1` derivatives
    /// singular at an endpoint.
    pub fn has_fractional_exponent(&self) -> bool {
        match self.kind {
            AugmentationKind::Identity => false,
            AugmentationKind::Mixed => self.pa.fract() != 0.0,
            AugmentationKind::Dirichlet | AugmentationKind::Neumann => {
                self.pa.fract() != 0.0 || self.pb.fract() != 0.0
            }
        }
    }

    /// Exponential damping factor of the slope-slope case, `exp(pa x/(a-b))`.
    fn efac(&self, x: f64) -> f64 {
        (self.pa * x / (self.a - self.b)).exp()
    }

    /// Boundary-vanishing factor `h1`.
    pub fn h1(&self, x: f64) -> f64 {
        match self.kind {
            AugmentationKind::Identity => 1.0,
            AugmentationKind::Dirichlet => pv(x - self.a, self.pa) * pv(x - self.b, self.pb),
            AugmentationKind::Mixed => pv(x - self.a, self.pa),
            AugmentationKind::Neumann => {
                self.efac(x) * pv(x - self.a, self.pa) * pv(x - self.b, self.pb)
            }
        }
    }

    /// `dh1/dx`.
    pub fn dh1(&self, x: f64) -> f64 {
        let (ya, yb) = (x - self.a, x - self.b);
        match self.kind {
            AugmentationKind::Identity => 0.0,
            AugmentationKind::Dirichlet => {
                pd1(ya, self.pa) * pv(yb, self.pb) + pv(ya, self.pa) * pd1(yb, self.pb)
            }
            AugmentationKind::Mixed => pd1(ya, self.pa),
            AugmentationKind::Neumann => {
                let k = self.pa / (self.a - self.b);
                let w = pv(ya, self.pa) * pv(yb, self.pb);
                let dw =
                    pd1(ya, self.pa) * pv(yb, self.pb) + pv(ya, self.pa) * pd1(yb, self.pb);
                self.efac(x) * (k * w + dw)
            }
        }
    }

    /// `d2h1/dx2`.
    pub fn d2h1(&self, x: f64) -> f64 {
        let (ya, yb) = (x - self.a, x - self.b);
        match self.kind {
            AugmentationKind::Identity => 0.0,
            AugmentationKind::Dirichlet => {
                pd2(ya, self.pa) * pv(yb, self.pb)
                    + 2.0 * pd1(ya, self.pa) * pd1(yb, self.pb)
                    + pv(ya, self.pa) * pd2(yb, self.pb)
            }
            AugmentationKind::Mixed => pd2(ya, self.pa),
            AugmentationKind::Neumann => {
                let k = self.pa / (self.a - self.b);
                let w = pv(ya, self.pa) * pv(yb, self.pb);
                let dw =
                    pd1(ya, self.pa) * pv(yb, self.pb) + pv(ya, self.pa) * pd1(yb, self.pb);
                let d2w = pd2(ya, self.pa) * pv(yb, self.pb)
                    + 2.0 * pd1(ya, self.pa) * pd1(yb, self.pb)
                    + pv(ya, self.pa) * pd2(yb, self.pb);
                self.efac(x) * (k * k * w + 2.0 * k * dw + d2w)
            }
        }
    }

    /// Parameter-independent part of `h2` (the mixed case adds a
    /// theta-coupled constant on top; the slope-slope case adds the trainable
    /// extras).
    pub fn h2_fixed(&self, x: f64) -> f64 {
        match self.kind {
            AugmentationKind::Identity => 0.0,
            AugmentationKind::Dirichlet => {
                (self.b0 - self.a0) * (x - self.a) / (self.b - self.a) + self.a0
            }
            AugmentationKind::Mixed => self.a0 * x + self.b0 - self.a0 * self.b,
            AugmentationKind::Neumann => {
                let ya = x - self.a;
                (self.b0 - self.a0) * ya * ya / (2.0 * (self.b - self.a)) + self.a0 * x
            }
        }
    }

    /// `dh2_fixed/dx` (analytic).
    fn dh2_fixed(&self, x: f64) -> f64 {
        match self.kind {
            AugmentationKind::Identity => 0.0,
            AugmentationKind::Dirichlet => (self.b0 - self.a0) / (self.b - self.a),
            AugmentationKind::Mixed => self.a0,
            AugmentationKind::Neumann => {
                (self.b0 - self.a0) * (x - self.a) / (self.b - self.a) + self.a0
            }
        }
    }

    /// `d2h2_fixed/dx2` (analytic).
    fn d2h2_fixed(&self) -> f64 {
        match self.kind {
            AugmentationKind::Neumann => (self.b0 - self.a0) / (self.b - self.a),
            _ => 0.0,
        }
    }

    /// `L h2_fixed` at pre-evaluated one-dimensional coefficients.
    pub(crate) fn l_h2_fixed(&self, x: f64, co: &PointCoefficients) -> f64 {
        co.a[0] * self.d2h2_fixed() + co.b[0] * self.dh2_fixed(x) + co.c * self.h2_fixed(x)
    }

    /// Flux-neutral profile `E(x) P(x)` multiplying the trainable `c2`.
    fn extra_profile(&self, x: f64) -> f64 {
        self.efac(x) * pv(x - self.a, self.pa)
    }

    /// First two derivatives of `E P`.
    fn extra_profile_derivs(&self, x: f64) -> (f64, f64) {
        let k = self.pa / (self.a - self.b);
        let e = self.efac(x);
        let p = pv(x - self.a, self.pa);
        let dp = pd1(x - self.a, self.pa);
        let d2p = pd2(x - self.a, self.pa);
        (e * (k * p + dp), e * (k * k * p + 2.0 * k * dp + d2p))
    }

    /// `L(E P)` at pre-evaluated coefficients (slope-slope extras only).
    pub(crate) fn l_extra_profile(&self, x: f64, co: &PointCoefficients) -> f64 {
        let (d1, d2) = self.extra_profile_derivs(x);
        co.a[0] * d2 + co.b[0] * d1 + co.c * self.extra_profile(x)
    }

    /// Coupling weight of the mixed case: `h2` subtracts
    /// `(b-a)^{pa} phi~(b; theta)`.
    pub(crate) fn coupling_scale(&self) -> f64 {
        pv(self.b - self.a, self.pa)
    }

    /// Full solution `phi(x; theta)` assembled from the free network.
    ///
    /// One-dimensional for every kind except `Identity`, which passes the
    /// network through unchanged in any dimension.
    pub fn assembled_phi(&self, theta: &TwoLayerParams, x: &[f64]) -> Result<f64> {
        if self.kind == AugmentationKind::Identity {
            return eval_phi(theta, x);
        }
        if x.len() != 1 || theta.dim() != 1 {
            return Err(CoreError::DimensionMismatch(
                "endpoint augmentations are one-dimensional".into(),
            ));
        }
        let t = x[0];
        let tilde = eval_phi(theta, x)?;
        let base = self.h1(t) * tilde + self.h2_fixed(t);
        Ok(match self.kind {
            AugmentationKind::Identity => unreachable!(),
            AugmentationKind::Dirichlet => base,
            AugmentationKind::Mixed => {
                base - self.coupling_scale() * eval_phi(theta, &[self.b])?
            }
            AugmentationKind::Neumann => base + self.c1 + self.c2 * self.extra_profile(t),
        })
    }
}

/// The interior problem for the free network, carrying the original problem
/// and the augmentation that produced it.
#[derive(Debug, Clone)]
pub struct TransformedProblem {
    original: PdeProblem,
    transformed: PdeProblem,
    aug: BoundaryAugmentation,
}

/// Rewrite `L u = f` with `u = h1 phi~ + h2` as the interior problem
/// `L~ phi~ = f~` for the free network.
///
/// The transformed coefficient and right-hand-side bounds are estimated by a
/// dense grid scan over the interval (the declared bounds are then enforced
/// lazily at every later evaluation, as for any problem).
pub fn transform_operator(
    problem: &PdeProblem,
    aug: &BoundaryAugmentation,
) -> Result<TransformedProblem> {
    if aug.kind() == AugmentationKind::Identity {
        return Ok(TransformedProblem {
            original: problem.clone(),
            transformed: problem.clone(),
            aug: aug.clone(),
        });
    }
    if problem.dim() != 1 {
        return Err(CoreError::DimensionMismatch(format!(
            "endpoint augmentations require a one-dimensional problem, got dimension {}",
            problem.dim()
        )));
    }

    let coeffs = problem.coeffs().clone();
    let (a_fn, b_fn, c_fn, f_fn) = {
        let (c1, c2, c3) = (coeffs.clone(), coeffs.clone(), coeffs.clone());
        let (g1, g2, g3, g4) = (aug.clone(), aug.clone(), aug.clone(), aug.clone());
        let rhs = problem.rhs_fn();
        let coeffs_f = coeffs.clone();
        let a_fn: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync> = Arc::new(move |x, out| {
            let co = c1.eval_at(x).expect("original coefficients must evaluate");
            out[0] = co.a[0] * g1.h1(x[0]);
        });
        let b_fn: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync> = Arc::new(move |x, out| {
            let co = c2.eval_at(x).expect("original coefficients must evaluate");
            out[0] = co.b[0] * g2.h1(x[0]) + 2.0 * co.a[0] * g2.dh1(x[0]);
        });
        let c_fn: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> = Arc::new(move |x| {
            let co = c3.eval_at(x).expect("original coefficients must evaluate");
            co.a[0] * g3.d2h1(x[0]) + co.b[0] * g3.dh1(x[0]) + co.c * g3.h1(x[0])
        });
        let f_fn: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> = Arc::new(move |x| {
            let co = coeffs_f.eval_at(x).expect("original coefficients must evaluate");
            (rhs)(x) - g4.l_h2_fixed(x[0], &co)
        });
        (a_fn, b_fn, c_fn, f_fn)
    };

    // scan for sup bounds on the transformed data; the margin keeps grid
    // round-off from tripping the lazy bound check later
    let (lo, hi) = scan_range(aug);
    let mut coeff_max: f64 = 0.0;
    let mut rhs_max: f64 = 0.0;
    for i in 0..BOUND_SCAN_POINTS {
        let x = [lo + (hi - lo) * i as f64 / (BOUND_SCAN_POINTS - 1) as f64];
        let mut buf = [0.0];
        a_fn(&x, &mut buf);
        coeff_max = coeff_max.max(buf[0].abs());
        b_fn(&x, &mut buf);
        coeff_max = coeff_max.max(buf[0].abs());
        coeff_max = coeff_max.max(c_fn(&x).abs());
        rhs_max = rhs_max.max(f_fn(&x).abs());
    }
    if !coeff_max.is_finite() || !rhs_max.is_finite() {
        return Err(CoreError::InvalidParameter(
            "transformed coefficients are not finite on the scan grid".into(),
        ));
    }
    let coeff_bound = coeff_max.max(1.0) * (1.0 + 1e-6);
    let rhs_bound = rhs_max.max(1.0) * (1.0 + 1e-6);

    let tcoeffs = CoefficientField::from_fns(1, coeff_bound, a_fn, b_fn, c_fn)?;
    let transformed = PdeProblem::with_rhs_bound(tcoeffs, f_fn, rhs_bound);
    Ok(TransformedProblem { original: problem.clone(), transformed, aug: aug.clone() })
}

fn scan_range(aug: &BoundaryAugmentation) -> (f64, f64) {
    let (a, b) = aug.interval();
    if aug.has_fractional_exponent() {
        (a + ENDPOINT_MARGIN, b - ENDPOINT_MARGIN)
    } else {
        (a, b)
    }
}

impl TransformedProblem {
    /// The interior problem the free network is trained on.
    pub fn problem(&self) -> &PdeProblem {
        &self.transformed
    }

    pub fn original(&self) -> &PdeProblem {
        &self.original
    }

    pub fn augmentation(&self) -> &BoundaryAugmentation {
        &self.aug
    }

    /// Clamping interval for sample points when `h1` has endpoint
    /// singularities (fractional exponents); `None` when the full interval
    /// is safe.
    pub fn sample_bounds(&self) -> Option<(f64, f64)> {
        if self.aug.has_fractional_exponent() {
            let (a, b) = self.aug.interval();
            Some((a + ENDPOINT_MARGIN, b - ENDPOINT_MARGIN))
        } else {
            None
        }
    }

    /// Apply the clamping interval to a sample set (no-op when unneeded).
    pub fn clamp_samples(&self, samples: &SampleSet) -> SampleSet {
        match self.sample_bounds() {
            Some((lo, hi)) => samples.clamped(lo, hi),
            None => samples.clone(),
        }
    }

    /// Number of trainable scalars beyond the network (the slope-slope case
    /// trains `c1, c2`).
    pub fn extra_count(&self) -> usize {
        match self.aug.kind() {
            AugmentationKind::Neumann => 2,
            _ => 0,
        }
    }

    /// Initial values of the trainable extras.
    pub fn initial_extras(&self) -> Vec<f64> {
        match self.aug.kind() {
            AugmentationKind::Neumann => vec![self.aug.c1, self.aug.c2],
            _ => Vec::new(),
        }
    }

    /// Operator images `u_j(x_i) = L g_j(x_i)` of the extra basis functions
    /// (`g_1 = 1`, `g_2 = E P`), evaluated per sample; the residual gains
    /// `sum_j extras_j u_j(x)` and `dJ/d extras_j = mean_i e_i u_j(x_i)`.
    pub(crate) fn extra_operator_values(&self, samples: &SampleSet) -> Result<Vec<Vec<f64>>> {
        if self.extra_count() == 0 {
            return Ok(Vec::new());
        }
        let mut u1 = Vec::with_capacity(samples.len());
        let mut u2 = Vec::with_capacity(samples.len());
        for x in samples.iter() {
            let co = self.original.coeffs().eval_at(x)?;
            u1.push(co.c);
            u2.push(self.aug.l_extra_profile(x[0], &co));
        }
        Ok(vec![u1, u2])
    }

    /// Mixed-case coupling: the residual gains `v(x) phi~(b; theta)` with
    /// `v(x) = -(b-a)^{pa} c(x)`. Returns the per-sample `v` values.
    pub(crate) fn coupling_values(&self, samples: &SampleSet) -> Result<Option<Vec<f64>>> {
        if self.aug.kind() != AugmentationKind::Mixed {
            return Ok(None);
        }
        let s = self.aug.coupling_scale();
        let mut v = Vec::with_capacity(samples.len());
        for x in samples.iter() {
            let co = self.original.coeffs().eval_at(x)?;
            v.push(-s * co.c);
        }
        Ok(Some(v))
    }

    /// Point the mixed case couples through (`phi~` is evaluated at `b`).
    pub(crate) fn coupling_point(&self) -> Option<f64> {
        (self.aug.kind() == AugmentationKind::Mixed).then_some(self.aug.interval().1)
    }

    /// Assembled solution `phi(x; theta, extras)`.
    pub fn assembled_value(&self, theta: &TwoLayerParams, extras: &[f64], x: &[f64]) -> Result<f64> {
        self.check_extras(extras)?;
        let aug = self.extras_view(extras);
        aug.assembled_phi(theta, x)
    }

    /// Residual `L(assembled phi)(x) - f(x)`, computed through the interior
    /// form `L~ phi~ - f~` plus the coupling and extra terms.
    pub fn assembled_residual(
        &self,
        theta: &TwoLayerParams,
        extras: &[f64],
        x: &[f64],
    ) -> Result<f64> {
        self.check_extras(extras)?;
        let co = self.transformed.coeffs().eval_at(x)?;
        let mut r = eval_l_phi_at(theta, x, &co) - self.transformed.rhs(x)?;
        match self.aug.kind() {
            AugmentationKind::Mixed => {
                let oco = self.original.coeffs().eval_at(x)?;
                let v = -self.aug.coupling_scale() * oco.c;
                r += v * eval_phi(theta, &[self.aug.interval().1])?;
            }
            AugmentationKind::Neumann => {
                let oco = self.original.coeffs().eval_at(x)?;
                r += extras[0] * oco.c + extras[1] * self.aug.l_extra_profile(x[0], &oco);
            }
            _ => {}
        }
        Ok(r)
    }

    fn check_extras(&self, extras: &[f64]) -> Result<()> {
        if extras.len() != self.extra_count() {
            return Err(CoreError::DimensionMismatch(format!(
                "expected {} extra scalars, got {}",
                self.extra_count(),
                extras.len()
            )));
        }
        Ok(())
    }

    fn extras_view(&self, extras: &[f64]) -> BoundaryAugmentation {
        match self.aug.kind() {
            AugmentationKind::Neumann => self.aug.clone().with_extras(extras[0], extras[1]),
            _ => self.aug.clone(),
        }
    }
}

/// Time-dependence kind for [`lift_time_dependent`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeKind {
    /// First order in time (`du/dt` term).
    Parabolic,
    /// Second order in time (`d2u/dt2` term).
    Hyperbolic,
}

/// Recast a time-dependent problem on `[0,1]^d x [0,T]` as a static problem
/// on `[0,1]^{d+1}` with normalized time `y_{d+1} = t/T`.
///
/// The spatial operator is embedded unchanged and the time derivative enters
/// with coefficient `-1/T` (first order) or `-1/T^2` (second order diagonal
/// entry), so a time-constant function has the same residual under both
/// operators. The right-hand side ignores the time coordinate.
pub fn lift_time_dependent(
    spatial: &PdeProblem,
    kind: TimeKind,
    t_horizon: f64,
) -> Result<PdeProblem> {
    if !(t_horizon > 0.0) || !t_horizon.is_finite() {
        return Err(CoreError::InvalidParameter(format!(
            "time horizon must be positive, got {t_horizon}"
        )));
    }
    let d = spatial.dim();
    let dd = d + 1;
    let coeffs = spatial.coeffs().clone();
    let time_coeff = match kind {
        TimeKind::Parabolic => -1.0 / t_horizon,
        TimeKind::Hyperbolic => -1.0 / (t_horizon * t_horizon),
    };
    let bound = spatial.coeffs().bound().max(time_coeff.abs());

    let (ca, cb, cc) = (coeffs.clone(), coeffs.clone(), coeffs);
    let a_fn: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync> = Arc::new(move |y, out| {
        let co = ca.eval_at(&y[..d]).expect("spatial coefficients must evaluate");
        out.fill(0.0);
        for i in 0..d {
            for j in 0..d {
                out[i * dd + j] = co.a[i * d + j];
            }
        }
        if kind == TimeKind::Hyperbolic {
            out[d * dd + d] = time_coeff;
        }
    });
    let b_fn: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync> = Arc::new(move |y, out| {
        let co = cb.eval_at(&y[..d]).expect("spatial coefficients must evaluate");
        out[..d].copy_from_slice(&co.b);
        out[d] = if kind == TimeKind::Parabolic { time_coeff } else { 0.0 };
    });
    let c_fn: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> = Arc::new(move |y| {
        let co = cc.eval_at(&y[..d]).expect("spatial coefficients must evaluate");
        co.c
    });
    let rhs = spatial.rhs_fn();
    let f_fn: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> = Arc::new(move |y| (rhs)(&y[..d]));

    let lifted_coeffs = CoefficientField::from_fns(dd, bound, a_fn, b_fn, c_fn)?;
    Ok(PdeProblem::with_rhs_bound(lifted_coeffs, f_fn, spatial.rhs_bound()))
}
