//! Network evaluation, operator application, risks, and exact gradients.
//!
//! The activation is the cubic ramp `sigma(z) = max(z^3/6, 0)`, chosen so
//! that its second derivative is the ReLU. For a network
//! `phi(x) = sum_k a_k sigma(w_k . x)` the operator image has the closed form
//!
//! ```text
//! (L phi)(x) = sum_k a_k [ w'A(x)w sigma''(w.x) + b(x).w sigma'(w.x) + c(x) sigma(w.x) ]
//! ```
//!
//! and the least-squares risk over samples `x_1..x_n` is
//! `R(theta) = 1/(2n) sum_i (L phi(x_i) - f(x_i))^2`. Gradients are exact
//! analytic expressions (no autodiff); the finite-difference harness in
//! [`crate::fdcheck`] is the independent reference they are tested against.
//!
//! Determinism contract: every reduction over neurons, samples, or Monte
//! Carlo draws runs in a fixed left-to-right index order. Parallel sections
//! only ever fan out over independent output slots, so results are
//! bit-identical for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::params::{RiskGradient, TwoLayerParams};
use crate::problem::{PdeProblem, PointCoefficients, SampleSet};

/// Cubic ramp activation `max(z^3/6, 0)`.
#[inline]
pub fn sigma(z: f64) -> f64 {
    if z > 0.0 {
        z * z * z / 6.0
    } else {
        0.0
    }
}

/// First derivative `z^2/2` on `z > 0`, else 0.
#[inline]
pub fn sigma_p(z: f64) -> f64 {
    if z > 0.0 {
        0.5 * z * z
    } else {
        0.0
    }
}

/// Second derivative: the ReLU `max(z, 0)`.
#[inline]
pub fn sigma_pp(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Third derivative: the step function, with the kink value fixed to
/// `sigma_ppp(0) = 0` so the subgradient choice is deterministic.
#[inline]
pub fn sigma_ppp(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Per-neuron operator value `T(w, x) = w'Aw sigma'' + b.w sigma' + c sigma`
/// at pre-evaluated coefficients. `L phi` is `sum_k a_k T(w_k, x)`.
#[inline]
pub(crate) fn neuron_operator(w: &[f64], x: &[f64], co: &PointCoefficients) -> f64 {
    let z: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum();
    if z <= 0.0 {
        // Every sigma derivative vanishes on the inactive half-space.
        return 0.0;
    }
    co.quad_form(w) * z + co.b_dot(w) * (0.5 * z * z) + co.c * (z * z * z / 6.0)
}

/// Gradient of `T(w, x)` with respect to `w`, written into `out`:
///
/// ```text
/// grad_w T = 2 A w sigma'' + (w'Aw) sigma''' x + sigma' b + (b.w) sigma'' x + c sigma' x
/// ```
#[inline]
pub(crate) fn neuron_operator_grad(w: &[f64], x: &[f64], co: &PointCoefficients, out: &mut [f64]) {
    let d = w.len();
    let z: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum();
    if z <= 0.0 {
        out[..d].fill(0.0);
        return;
    }
    let s1 = 0.5 * z * z; // sigma'
    let s2 = z; // sigma''
    let quad = co.quad_form(w);
    let bw = co.b_dot(w);
    // x-coefficient collects the sigma''', sigma'' and sigma' chain terms.
    let x_coef = quad + bw * s2 + co.c * s1;
    for alpha in 0..d {
        let mut aw = 0.0;
        for j in 0..d {
            aw += co.a[alpha * d + j] * w[j];
        }
        out[alpha] = 2.0 * aw * s2 + s1 * co.b[alpha] + x_coef * x[alpha];
    }
}

/// Network value `phi(x; theta)`.
pub fn eval_phi(theta: &TwoLayerParams, x: &[f64]) -> Result<f64> {
    if x.len() != theta.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "point has dimension {}, parameters have dimension {}",
            x.len(),
            theta.dim()
        )));
    }
    let mut acc = 0.0;
    for k in 0..theta.width() {
        let z: f64 = theta.w_row(k).iter().zip(x).map(|(wi, xi)| wi * xi).sum();
        acc += theta.a[k] * sigma(z);
    }
    Ok(acc)
}

/// Operator image `(L phi)(x; theta)` under the given coefficient field.
pub fn eval_l_phi(
    theta: &TwoLayerParams,
    x: &[f64],
    coeffs: &crate::problem::CoefficientField,
) -> Result<f64> {
    if theta.dim() != coeffs.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "parameters have dimension {}, coefficients have dimension {}",
            theta.dim(),
            coeffs.dim()
        )));
    }
    let co = coeffs.eval_at(x)?;
    Ok(eval_l_phi_at(theta, x, &co))
}

/// `L phi` at pre-evaluated coefficients (hot-path variant).
pub(crate) fn eval_l_phi_at(theta: &TwoLayerParams, x: &[f64], co: &PointCoefficients) -> f64 {
    let mut acc = 0.0;
    for k in 0..theta.width() {
        acc += theta.a[k] * neuron_operator(theta.w_row(k), x, co);
    }
    acc
}

/// Path norm `sum_k |a_k| ||w_k||_1^3`, the scale-invariant capacity measure.
pub fn path_norm(theta: &TwoLayerParams) -> f64 {
    let mut acc = 0.0;
    for k in 0..theta.width() {
        let l1: f64 = theta.w_row(k).iter().map(|v| v.abs()).sum();
        acc += theta.a[k].abs() * l1 * l1 * l1;
    }
    acc
}

/// Coefficients and rhs evaluated once per sample point; training loops and
/// Gram assembly reuse this across steps.
pub(crate) struct SampleCache {
    pub co: Vec<PointCoefficients>,
    pub rhs: Vec<f64>,
}

impl SampleCache {
    pub fn build(samples: &SampleSet, problem: &PdeProblem) -> Result<Self> {
        if samples.dim() != problem.dim() {
            return Err(CoreError::DimensionMismatch(format!(
                "samples have dimension {}, problem has dimension {}",
                samples.dim(),
                problem.dim()
            )));
        }
        let mut co = Vec::with_capacity(samples.len());
        let mut rhs = Vec::with_capacity(samples.len());
        for x in samples.iter() {
            co.push(problem.coeffs().eval_at(x)?);
            rhs.push(problem.rhs(x)?);
        }
        Ok(Self { co, rhs })
    }
}

/// Residuals `e_i = L phi(x_i) - f(x_i)` against cached coefficients.
pub(crate) fn residuals_cached(
    theta: &TwoLayerParams,
    samples: &SampleSet,
    cache: &SampleCache,
) -> Vec<f64> {
    (0..samples.len())
        .into_par_iter()
        .map(|i| eval_l_phi_at(theta, samples.point(i), &cache.co[i]) - cache.rhs[i])
        .collect()
}

/// Residual vector `(L phi(x_i) - f(x_i))_i`.
pub fn residuals(
    theta: &TwoLayerParams,
    samples: &SampleSet,
    problem: &PdeProblem,
) -> Result<Vec<f64>> {
    check_theta_dims(theta, samples)?;
    let cache = SampleCache::build(samples, problem)?;
    Ok(residuals_cached(theta, samples, &cache))
}

pub(crate) fn risk_from_residuals(e: &[f64]) -> f64 {
    let n = e.len() as f64;
    let ss: f64 = e.iter().map(|v| v * v).sum();
    ss / (2.0 * n)
}

/// Empirical least-squares risk `1/(2n) sum_i e_i^2`.
pub fn empirical_risk(
    theta: &TwoLayerParams,
    samples: &SampleSet,
    problem: &PdeProblem,
) -> Result<f64> {
    Ok(risk_from_residuals(&residuals(theta, samples, problem)?))
}

fn check_theta_dims(theta: &TwoLayerParams, samples: &SampleSet) -> Result<()> {
    if theta.dim() != samples.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "parameters have dimension {}, samples have dimension {}",
            theta.dim(),
            samples.dim()
        )));
    }
    Ok(())
}

/// Gradient of the empirical risk with residuals already in hand.
///
/// Parallel over neurons; the inner sums over samples run in index order, so
/// every output slot is a fixed-order reduction.
pub(crate) fn grad_risk_cached(
    theta: &TwoLayerParams,
    samples: &SampleSet,
    cache: &SampleCache,
    e: &[f64],
) -> RiskGradient {
    let m = theta.width();
    let d = theta.dim();
    let n = samples.len() as f64;
    let mut grad = RiskGradient::zeros(m, d);
    grad.a
        .par_iter_mut()
        .zip(grad.w.par_chunks_mut(d))
        .enumerate()
        .for_each(|(k, (ga, gw))| {
            let wk = theta.w_row(k);
            let ak = theta.a[k];
            let mut vbuf = vec![0.0; d];
            let mut da = 0.0;
            let mut dw = vec![0.0; d];
            for i in 0..e.len() {
                let x = samples.point(i);
                let co = &cache.co[i];
                da += e[i] * neuron_operator(wk, x, co);
                if ak != 0.0 {
                    neuron_operator_grad(wk, x, co, &mut vbuf);
                    for alpha in 0..d {
                        dw[alpha] += e[i] * vbuf[alpha];
                    }
                }
            }
            *ga = da / n;
            for alpha in 0..d {
                gw[alpha] = theta.a[k] * dw[alpha] / n;
            }
        });
    grad
}

/// Exact gradient of [`empirical_risk`] with respect to all parameters.
pub fn grad_risk(
    theta: &TwoLayerParams,
    samples: &SampleSet,
    problem: &PdeProblem,
) -> Result<RiskGradient> {
    check_theta_dims(theta, samples)?;
    let cache = SampleCache::build(samples, problem)?;
    let e = residuals_cached(theta, samples, &cache);
    Ok(grad_risk_cached(theta, samples, &cache, &e))
}

/// Monte Carlo estimate of the population risk
/// `1/2 E_x (L phi(x) - f(x))^2` over the uniform unit cube.
///
/// Returns `(estimate, standard_error)`; deterministic for a fixed seed.
pub fn population_risk_mc(
    theta: &TwoLayerParams,
    problem: &PdeProblem,
    num_mc: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if theta.dim() != problem.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "parameters have dimension {}, problem has dimension {}",
            theta.dim(),
            problem.dim()
        )));
    }
    if num_mc == 0 {
        return Err(CoreError::InvalidParameter("num_mc must be >= 1".into()));
    }
    let d = theta.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<f64> = (0..num_mc * d).map(|_| rng.random::<f64>()).collect();
    let values = (0..num_mc)
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let x = &points[j * d..(j + 1) * d];
            let co = problem.coeffs().eval_at(x)?;
            let e = eval_l_phi_at(theta, x, &co) - problem.rhs(x)?;
            Ok(0.5 * e * e)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_and_std_err(&values))
}

/// Mean and standard error of the mean, computed in index order.
pub(crate) fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0) / n).sqrt())
}
