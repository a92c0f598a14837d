//! Initialization, gradient descent, and training traces.
//!
//! Descent runs on the empirical operator risk `R_S` (explicit Euler on the
//! continuous-time flow, time `t = step * lr`), or on the regularized
//! objective
//!
//! ```text
//! J = R_S + (lambda / sqrt(n)) P^2 log(pi (P + 1)),    P = path norm,
//! ```
//!
//! when `lambda > 0`. When a boundary augmentation is supplied, training
//! happens on the transformed interior problem, with the mixed case's
//! network-coupled constant and the slope-slope case's trainable scalars
//! `(c1, c2)` differentiated exactly.
//!
//! Two initializations are provided: plain Gaussian (`a_k ~ N(0, gamma^2)`,
//! `w_k ~ N(0, I)`), and the antisymmetric variant that pairs every neuron
//! with a negated copy. Paired neurons sit adjacently in the sum, so the
//! initial network — and with `f = 0` the whole trajectory — is exactly zero,
//! not merely small. Everything is deterministic per seed, including the
//! backtracking line search, for any worker count.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::boundary::{transform_operator, BoundaryAugmentation};
use crate::error::{CoreError, Result};
use crate::linalg::Matrix;
use crate::ntk;
use crate::operator::{
    eval_phi, grad_risk_cached, path_norm, residuals_cached, risk_from_residuals, sigma, sigma_p,
    SampleCache,
};
use crate::params::{RiskGradient, TwoLayerParams};
use crate::problem::{PdeProblem, SampleSet};

const BACKTRACK_START: f64 = 1e-2;
const BACKTRACK_MAX_HALVINGS: u32 = 60;
const DIVERGENCE_FACTOR: f64 = 1e6;

/// Hyperparameters of one training run.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Final network width (after antisymmetric pairing, if enabled).
    pub width: usize,
    /// Outer-weight scale; `None` selects the width-dependent default.
    pub gamma: Option<f64>,
    /// Step size; `None` backtracks from 1e-2 at the initial point.
    pub learning_rate: Option<f64>,
    /// Number of gradient steps.
    pub steps: usize,
    /// Pair every neuron with a negated copy so the initial network is 0.
    pub asi: bool,
    /// Path-norm regularization weight (0 trains the plain risk).
    pub lambda: f64,
    /// Seed for parameter initialization.
    pub seed: u64,
    /// Record every k-th step; `None` records every step up to 1000 steps,
    /// then thins to about 1000 records.
    pub trace_cadence: Option<usize>,
    /// Also record Gram-matrix diagnostics every k-th recorded step.
    pub gram_cadence: Option<usize>,
}

impl TrainConfig {
    /// Plain-risk config with default scale, backtracked step size, and
    /// default cadence.
    pub fn new(width: usize, steps: usize, seed: u64) -> Self {
        Self {
            width,
            gamma: None,
            learning_rate: None,
            steps,
            asi: false,
            lambda: 0.0,
            seed,
            trace_cadence: None,
            gram_cadence: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(CoreError::InvalidParameter("width must be >= 1".into()));
        }
        if self.asi && self.width % 2 != 0 {
            return Err(CoreError::InvalidParameter(format!(
                "antisymmetric pairing needs an even width, got {}",
                self.width
            )));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g < 1.0) {
                return Err(CoreError::InvalidParameter(format!(
                    "gamma must lie in (0, 1), got {g}"
                )));
            }
        }
        if let Some(lr) = self.learning_rate {
            if !(lr > 0.0) || !lr.is_finite() {
                return Err(CoreError::InvalidParameter(format!(
                    "learning rate must be positive, got {lr}"
                )));
            }
        }
        if self.lambda < 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "regularization weight must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.trace_cadence == Some(0) || self.gram_cadence == Some(0) {
            return Err(CoreError::InvalidParameter("cadence must be >= 1".into()));
        }
        Ok(())
    }
}

/// Width-dependent default outer scale `1/(sqrt(m) log^2 m)`, capped at 1/2
/// (the formula exceeds any constant for small `m`).
pub fn default_gamma(m: usize) -> f64 {
    let mf = m as f64;
    let l = mf.ln();
    let g = 1.0 / (mf.sqrt() * l * l);
    if g.is_finite() { g.min(0.5) } else { 0.5 }
}

/// Gaussian initialization: `a_k ~ N(0, gamma^2)` then `w_k ~ N(0, I_d)`,
/// drawn in that order from one seeded stream.
pub fn init_params(m: usize, d: usize, gamma: f64, seed: u64) -> Result<TwoLayerParams> {
    if m == 0 || d == 0 {
        return Err(CoreError::InvalidParameter("need m >= 1 and d >= 1".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(CoreError::InvalidParameter(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..m).map(|_| gamma * rng.sample::<f64, _>(StandardNormal)).collect();
    let w: Vec<f64> = (0..m * d).map(|_| rng.sample(StandardNormal)).collect();
    TwoLayerParams::new(d, a, w)
}

/// Antisymmetric pairing: each neuron `(a_k, w_k)` is followed by
/// `(-a_k, w_k)`, doubling the width. Adjacent exact cancellation makes the
/// initial network identically zero, so the initial risk is
/// `1/(2n) sum f(x_i)^2 <= 1/2` whenever `|f| <= 1`.
pub fn asi_init(theta: &TwoLayerParams) -> TwoLayerParams {
    let m = theta.width();
    let d = theta.dim();
    let mut a = Vec::with_capacity(2 * m);
    let mut w = Vec::with_capacity(2 * m * d);
    for k in 0..m {
        a.push(theta.a[k]);
        a.push(-theta.a[k]);
        w.extend_from_slice(theta.w_row(k));
        w.extend_from_slice(theta.w_row(k));
    }
    TwoLayerParams::new(d, a, w).expect("doubling a valid parameter set stays valid")
}

/// One explicit-Euler step `theta - lr * grad`.
pub fn gd_step(theta: &TwoLayerParams, grad: &RiskGradient, lr: f64) -> Result<TwoLayerParams> {
    if grad.a.len() != theta.width() || grad.w.len() != theta.w.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "gradient shape ({}, {}) does not match parameters ({}, {})",
            grad.a.len(),
            grad.w.len(),
            theta.width(),
            theta.w.len()
        )));
    }
    let a = theta.a.iter().zip(&grad.a).map(|(p, g)| p - lr * g).collect();
    let w = theta.w.iter().zip(&grad.w).map(|(p, g)| p - lr * g).collect();
    TwoLayerParams::new(theta.dim(), a, w)
}

/// Path-norm penalty `(lambda / sqrt(n)) P^2 log(pi (P + 1))`.
pub fn path_norm_penalty(theta: &TwoLayerParams, lambda: f64, n: usize) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let p = path_norm(theta);
    lambda / (n as f64).sqrt() * p * p * (std::f64::consts::PI * (p + 1.0)).ln()
}

/// Risk plus path-norm penalty.
pub fn regularized_objective(
    theta: &TwoLayerParams,
    samples: &SampleSet,
    problem: &PdeProblem,
    lambda: f64,
) -> Result<f64> {
    let risk = crate::operator::empirical_risk(theta, samples, problem)?;
    Ok(risk + path_norm_penalty(theta, lambda, samples.len()))
}

/// Exact gradient of the path-norm penalty, with the subgradient convention
/// `sign(0) = 0` at kinks.
pub fn grad_regularizer(theta: &TwoLayerParams, lambda: f64, n: usize) -> RiskGradient {
    let m = theta.width();
    let d = theta.dim();
    let mut grad = RiskGradient::zeros(m, d);
    if lambda == 0.0 {
        return grad;
    }
    let p = path_norm(theta);
    let scale = lambda / (n as f64).sqrt();
    // d/dP of scale * P^2 log(pi (P+1))
    let dp = scale * (2.0 * p * (std::f64::consts::PI * (p + 1.0)).ln() + p * p / (p + 1.0));
    let s = |v: f64| {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    for k in 0..m {
        let wk = theta.w_row(k);
        let l1: f64 = wk.iter().map(|v| v.abs()).sum();
        grad.a[k] = dp * s(theta.a[k]) * l1 * l1 * l1;
        for alpha in 0..d {
            grad.w[k * d + alpha] = dp * 3.0 * theta.a[k].abs() * l1 * l1 * s(wk[alpha]);
        }
    }
    grad
}

/// One row of a [`TrainingTrace`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: usize,
    /// Flow time `step * lr`.
    pub t: f64,
    /// Plain empirical risk `R_S` (even when training the regularized
    /// objective).
    pub risk: f64,
    pub path_norm: f64,
    /// `max_k |a_k - a_k(0)|`.
    pub max_da: f64,
    /// `max_k ||w_k - w_k(0)||_inf`.
    pub max_dw: f64,
    /// Smallest Gram eigenvalue, on Gram-cadence steps.
    pub lambda_min: Option<f64>,
    /// `||G_a(theta) - G_a(theta0)||_F`, on Gram-cadence steps.
    pub gram_drift: Option<f64>,
}

/// Recorded training trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingTrace {
    pub records: Vec<TraceRecord>,
}

impl TrainingTrace {
    /// CSV with a header row; floats at 17 significant digits, optional
    /// fields empty when absent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,t,risk,path_norm,max_da,max_dw,lambda_min,gram_drift\n");
        for r in &self.records {
            let _ = write!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},",
                r.step, r.t, r.risk, r.path_norm, r.max_da, r.max_dw
            );
            if let Some(v) = r.lambda_min {
                let _ = write!(out, "{v:.16e}");
            }
            out.push(',');
            if let Some(v) = r.gram_drift {
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn final_record(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

/// Output of [`train`].
#[derive(Debug, Clone)]
pub struct TrainResult {
    /// Final free-network parameters.
    pub theta: TwoLayerParams,
    /// Final trainable augmentation scalars (slope-slope case; else empty).
    pub extras: Vec<f64>,
    pub trace: TrainingTrace,
    /// Step size actually used (backtracked or configured).
    pub learning_rate: f64,
    pub initial_risk: f64,
    pub final_risk: f64,
}

/// Residual assembly and differentiation for the (possibly augmented)
/// training objective.
struct Objective {
    samples: SampleSet,
    cache: SampleCache,
    /// `u_j(x_i) = (L g_j)(x_i)` per trainable extra.
    extra_ops: Vec<Vec<f64>>,
    /// Mixed-case coupling: point `b` and weights `v(x_i)`.
    coupling: Option<(f64, Vec<f64>)>,
    lambda: f64,
}

impl Objective {
    fn n(&self) -> usize {
        self.samples.len()
    }

    fn residuals(&self, theta: &TwoLayerParams, extras: &[f64]) -> Result<Vec<f64>> {
        let mut e = residuals_cached(theta, &self.samples, &self.cache);
        if let Some((b, v)) = &self.coupling {
            let phi_b = eval_phi(theta, &[*b])?;
            for (ei, vi) in e.iter_mut().zip(v) {
                *ei += vi * phi_b;
            }
        }
        for (j, u) in self.extra_ops.iter().enumerate() {
            for (ei, ui) in e.iter_mut().zip(u) {
                *ei += extras[j] * ui;
            }
        }
        Ok(e)
    }

    /// Trained objective value: risk plus penalty when regularizing.
    fn value(&self, e: &[f64], theta: &TwoLayerParams) -> f64 {
        risk_from_residuals(e) + path_norm_penalty(theta, self.lambda, self.n())
    }

    fn gradients(
        &self,
        theta: &TwoLayerParams,
        e: &[f64],
    ) -> Result<(RiskGradient, Vec<f64>)> {
        let n = self.n() as f64;
        let mut grad = grad_risk_cached(theta, &self.samples, &self.cache, e);
        if let Some((b, v)) = &self.coupling {
            // residual term v(x) phi~(b; theta): chain through phi~(b)
            let sv: f64 = e.iter().zip(v).map(|(ei, vi)| ei * vi).sum();
            let d = theta.dim();
            for k in 0..theta.width() {
                let z = theta.w_row(k)[0] * b;
                grad.a[k] += sv * sigma(z) / n;
                grad.w[k * d] += sv * theta.a[k] * sigma_p(z) * b / n;
            }
        }
        let extra_grads = self
            .extra_ops
            .iter()
            .map(|u| e.iter().zip(u).map(|(ei, ui)| ei * ui).sum::<f64>() / n)
            .collect();
        if self.lambda > 0.0 {
            grad.add_assign(&grad_regularizer(theta, self.lambda, self.n()));
        }
        Ok((grad, extra_grads))
    }
}

fn backtrack_lr(
    obj: &Objective,
    theta: &TwoLayerParams,
    extras: &[f64],
    j0: f64,
    grad: &RiskGradient,
    extra_grads: &[f64],
) -> Result<f64> {
    let flat = grad.is_zero() && extra_grads.iter().all(|&g| g == 0.0);
    if flat {
        return Ok(BACKTRACK_START);
    }
    let mut lr = BACKTRACK_START;
    for _ in 0..=BACKTRACK_MAX_HALVINGS {
        let cand = gd_step(theta, grad, lr)?;
        let cand_extras: Vec<f64> =
            extras.iter().zip(extra_grads).map(|(c, g)| c - lr * g).collect();
        if cand.is_finite() {
            let e = obj.residuals(&cand, &cand_extras)?;
            let j = obj.value(&e, &cand);
            if j.is_finite() && j < j0 {
                return Ok(lr);
            }
        }
        lr *= 0.5;
    }
    Err(CoreError::BacktrackFailed { start: BACKTRACK_START, halvings: BACKTRACK_MAX_HALVINGS })
}

/// Train a network on the problem (transformed through `aug` when given)
/// by gradient descent.
///
/// Records a trace at step 0, every cadence step, and the final step. The
/// run aborts with an error if the risk stops being finite or exceeds
/// 10^6 times its initial value.
pub fn train(
    problem: &PdeProblem,
    samples: &SampleSet,
    config: &TrainConfig,
    aug: Option<&BoundaryAugmentation>,
) -> Result<TrainResult> {
    config.validate()?;

    // resolve the trained problem and augmentation plumbing
    let (trained, samples, extra_ops, coupling, mut extras) = match aug {
        Some(aug) => {
            let tp = transform_operator(problem, aug)?;
            let samples = tp.clamp_samples(samples);
            let extra_ops = tp.extra_operator_values(&samples)?;
            let coupling = match (tp.coupling_point(), tp.coupling_values(&samples)?) {
                (Some(b), Some(v)) => Some((b, v)),
                _ => None,
            };
            let extras = tp.initial_extras();
            (tp.problem().clone(), samples, extra_ops, coupling, extras)
        }
        None => (problem.clone(), samples.clone(), Vec::new(), None, Vec::new()),
    };

    let d = trained.dim();
    let draw_width = if config.asi { config.width / 2 } else { config.width };
    let gamma = config.gamma.unwrap_or_else(|| default_gamma(draw_width));
    let mut theta = init_params(draw_width, d, gamma, config.seed)?;
    if config.asi {
        theta = asi_init(&theta);
    }
    let theta0 = theta.clone();

    let cache = SampleCache::build(&samples, &trained)?;
    let obj = Objective { samples, cache, extra_ops, coupling, lambda: config.lambda };

    let mut e = obj.residuals(&theta, &extras)?;
    let initial_risk = risk_from_residuals(&e);
    let divergence_limit = if initial_risk > 0.0 {
        DIVERGENCE_FACTOR * initial_risk
    } else {
        f64::INFINITY
    };

    let (mut grad, mut extra_grads) = obj.gradients(&theta, &e)?;
    let lr = match config.learning_rate {
        Some(lr) => lr,
        None => backtrack_lr(&obj, &theta, &extras, obj.value(&e, &theta), &grad, &extra_grads)?,
    };

    let cadence = config
        .trace_cadence
        .unwrap_or(if config.steps <= 1000 { 1 } else { config.steps.div_ceil(1000) });

    // Gram diagnostics against the initial parameters
    let gram0: Option<Matrix> = match config.gram_cadence {
        Some(_) => Some(ntk::gram_a(&theta0, &obj.samples, trained.coeffs())?),
        None => None,
    };
    let gram_info = |theta: &TwoLayerParams, step: usize| -> Result<(Option<f64>, Option<f64>)> {
        match (&gram0, config.gram_cadence) {
            (Some(g0), Some(k)) if step % k == 0 => {
                let g = ntk::gram_a(theta, &obj.samples, trained.coeffs())?;
                Ok((Some(ntk::lambda_min(&g)?), Some(g0.frobenius_distance(&g))))
            }
            _ => Ok((None, None)),
        }
    };

    let mut trace = TrainingTrace::default();
    let record = |trace: &mut TrainingTrace,
                  step: usize,
                  risk: f64,
                  theta: &TwoLayerParams,
                  diag: (Option<f64>, Option<f64>)| {
        let (max_da, max_dw) = theta.max_deviation(&theta0);
        trace.records.push(TraceRecord {
            step,
            t: step as f64 * lr,
            risk,
            path_norm: path_norm(theta),
            max_da,
            max_dw,
            lambda_min: diag.0,
            gram_drift: diag.1,
        });
    };
    record(&mut trace, 0, initial_risk, &theta, gram_info(&theta, 0)?);

    let mut risk = initial_risk;
    for step in 1..=config.steps {
        theta = gd_step(&theta, &grad, lr)?;
        for (c, g) in extras.iter_mut().zip(&extra_grads) {
            *c -= lr * g;
        }
        e = obj.residuals(&theta, &extras)?;
        risk = risk_from_residuals(&e);
        if !risk.is_finite() || !theta.is_finite() {
            return Err(CoreError::NonFinite { step });
        }
        if risk > divergence_limit {
            return Err(CoreError::Diverged { step, risk, initial: initial_risk });
        }
        if step % cadence == 0 || step == config.steps {
            record(&mut trace, step, risk, &theta, gram_info(&theta, step)?);
        }
        if step < config.steps {
            (grad, extra_grads) = obj.gradients(&theta, &e)?;
        }
    }

    Ok(TrainResult {
        theta,
        extras,
        trace,
        learning_rate: lr,
        initial_risk,
        final_risk: risk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdcheck;
    use crate::problem::CoefficientField;
    use std::sync::Arc;

    #[test]
    fn default_scale_caps_and_decays() {
        assert_eq!(default_gamma(1), 0.5); // log 1 = 0 would blow up
        assert_eq!(default_gamma(2), 0.5); // formula exceeds the cap
        for &m in &[8usize, 100, 10_000] {
            let g = default_gamma(m);
            let mf = m as f64;
            assert!((g * mf.sqrt() * mf.ln() * mf.ln() - 1.0).abs() <= 1e-12);
        }
        assert!(default_gamma(10_000) < default_gamma(100));
    }

    #[test]
    fn init_statistics() {
        let m = 100_000;
        let gamma = 0.3;
        let theta = init_params(m, 2, gamma, 11).unwrap();
        let mean_a: f64 = theta.a.iter().sum::<f64>() / m as f64;
        assert!(
            mean_a.abs() <= 3.0 * gamma / (m as f64).sqrt(),
            "outer-weight mean {mean_a} too far from 0"
        );
        let var_w: f64 = theta.w.iter().map(|v| v * v).sum::<f64>() / theta.w.len() as f64;
        assert!(
            (var_w - 1.0).abs() <= 3.0 * (2.0 / theta.w.len() as f64).sqrt(),
            "inner-weight variance {var_w} too far from 1"
        );
        // determinism
        let again = init_params(m, 2, gamma, 11).unwrap();
        assert_eq!(theta.a, again.a);
        assert_eq!(theta.w, again.w);
    }

    #[test]
    fn paired_init_is_exactly_zero() {
        let theta = asi_init(&init_params(17, 3, 0.2, 5).unwrap());
        assert_eq!(theta.width(), 34);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            assert_eq!(eval_phi(&theta, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn paired_init_risk_at_most_half() {
        let problem = PdeProblem::new(
            CoefficientField::laplacian(1),
            Arc::new(|x: &[f64]| (7.3 * x[0]).sin()),
        );
        let samples = SampleSet::uniform(20, 1, 3).unwrap();
        let theta = asi_init(&init_params(50, 1, 0.1, 4).unwrap());
        let risk = crate::operator::empirical_risk(&theta, &samples, &problem).unwrap();
        assert!(risk <= 0.5, "initial risk {risk}");
        // and exactly 0 when f vanishes
        let zero = PdeProblem::new(CoefficientField::laplacian(1), Arc::new(|_: &[f64]| 0.0));
        assert_eq!(crate::operator::empirical_risk(&theta, &samples, &zero).unwrap(), 0.0);
    }

    #[test]
    fn euler_step_identities() {
        let theta = TwoLayerParams::new(1, vec![1.0, -2.0], vec![0.5, 0.25]).unwrap();
        let zero = RiskGradient::zeros(2, 1);
        let same = gd_step(&theta, &zero, 0.7).unwrap();
        assert_eq!(same.a, theta.a);
        assert_eq!(same.w, theta.w);
        let grad = RiskGradient { a: vec![0.25, 0.5], w: vec![1.0, 2.0] };
        let frozen = gd_step(&theta, &grad, 0.0).unwrap();
        assert_eq!(frozen.a, theta.a);
        // two half steps of a frozen gradient equal one full step
        // (dyadic values keep the arithmetic exact)
        let half = gd_step(&gd_step(&theta, &grad, 0.25).unwrap(), &grad, 0.25).unwrap();
        let full = gd_step(&theta, &grad, 0.5).unwrap();
        assert_eq!(half.a, full.a);
        assert_eq!(half.w, full.w);
        // shape mismatch is an error
        assert!(gd_step(&theta, &RiskGradient::zeros(3, 1), 0.1).is_err());
    }

    #[test]
    fn zero_rhs_paired_training_stays_at_zero() {
        let problem = PdeProblem::new(CoefficientField::laplacian(1), Arc::new(|_: &[f64]| 0.0));
        let samples = SampleSet::uniform(5, 1, 9).unwrap();
        let mut config = TrainConfig::new(20, 25, 7);
        config.asi = true;
        let result = train(&problem, &samples, &config, None).unwrap();
        assert_eq!(result.initial_risk, 0.0);
        assert_eq!(result.final_risk, 0.0);
        assert!(result.trace.records.iter().all(|r| r.risk == 0.0));
        assert_eq!(result.trace.records.len(), 26);
    }

    #[test]
    fn risk_decreases_on_smooth_problem() {
        let problem = PdeProblem::new(
            CoefficientField::laplacian(1),
            Arc::new(|x: &[f64]| (2.0 * x[0]).sin() * 0.8),
        );
        let samples = SampleSet::uniform(5, 1, 12).unwrap();
        let config = TrainConfig::new(1000, 40, 3);
        let result = train(&problem, &samples, &config, None).unwrap();
        let risks: Vec<f64> = result.trace.records.iter().map(|r| r.risk).collect();
        // monotone until the iterate converges, where the last ulps may wobble
        for pair in risks.windows(2) {
            assert!(
                pair[1] <= pair[0] * (1.0 + 1e-12),
                "risk increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
        assert!(result.final_risk < 0.25 * result.initial_risk);
    }

    #[test]
    fn identical_seeds_identical_traces() {
        let problem = PdeProblem::new(
            CoefficientField::laplacian(1),
            Arc::new(|x: &[f64]| x[0] * 0.5),
        );
        let samples = SampleSet::uniform(4, 1, 2).unwrap();
        let mut config = TrainConfig::new(64, 30, 123);
        config.gram_cadence = Some(10);
        let r1 = train(&problem, &samples, &config, None).unwrap();
        let r2 = train(&problem, &samples, &config, None).unwrap();
        assert_eq!(r1.trace, r2.trace);
        assert_eq!(r1.theta.a, r2.theta.a);
        assert_eq!(r1.theta.w, r2.theta.w);
        assert_eq!(r1.learning_rate, r2.learning_rate);
    }

    #[test]
    fn divergence_guard_trips_on_huge_steps() {
        let problem = PdeProblem::new(
            CoefficientField::laplacian(1),
            Arc::new(|x: &[f64]| x[0] * 0.5),
        );
        let samples = SampleSet::uniform(5, 1, 2).unwrap();
        let mut config = TrainConfig::new(50, 500, 4);
        config.learning_rate = Some(1e3);
        let err = train(&problem, &samples, &config, None).unwrap_err();
        assert!(
            matches!(err, CoreError::Diverged { .. } | CoreError::NonFinite { .. }),
            "unexpected error {err:?}"
        );
    }

    #[test]
    fn penalty_matches_closed_form() {
        // single neuron a=1, w=1: path norm exactly 1
        let theta = TwoLayerParams::new(1, vec![1.0], vec![1.0]).unwrap();
        assert_eq!(path_norm(&theta), 1.0);
        // lambda=10, n=100: penalty = log(2 pi)
        let p = path_norm_penalty(&theta, 10.0, 100);
        assert!(
            (p - 1.8378770664093455).abs() <= 1e-14,
            "penalty {p} is not log(2 pi)"
        );
        // risk term vanishes when the rhs is the network's own image
        let coeffs = CoefficientField::laplacian(1);
        let rhs_theta = theta.clone();
        let rhs_coeffs = coeffs.clone();
        let problem = PdeProblem::new(
            coeffs,
            Arc::new(move |x: &[f64]| {
                crate::operator::eval_l_phi(&rhs_theta, x, &rhs_coeffs).unwrap()
            }),
        );
        let samples = SampleSet::uniform(100, 1, 8).unwrap();
        let j = regularized_objective(&theta, &samples, &problem, 10.0).unwrap();
        assert!((j - 1.8378770664093455).abs() <= 1e-14, "objective {j}");
        // lambda = 0 reduces to the plain risk
        let j0 = regularized_objective(&theta, &samples, &problem, 0.0).unwrap();
        assert_eq!(j0, 0.0);
        // zero parameters give zero penalty
        let zero = TwoLayerParams::zeros(3, 1).unwrap();
        assert_eq!(path_norm_penalty(&zero, 5.0, 10), 0.0);
    }

    #[test]
    fn penalty_gradient_matches_finite_differences() {
        let theta = TwoLayerParams::new(
            2,
            vec![0.8, -0.5, 0.3],
            vec![0.4, -0.7, 1.1, 0.6, -0.2, 0.9],
        )
        .unwrap();
        let grad = grad_regularizer(&theta, 2.5, 50);
        let m = theta.width();
        let flat: Vec<f64> = theta.a.iter().chain(theta.w.iter()).copied().collect();
        let fd = fdcheck::grad_fd(
            |v: &[f64]| {
                let t = TwoLayerParams::new(2, v[..m].to_vec(), v[m..].to_vec()).unwrap();
                path_norm_penalty(&t, 2.5, 50)
            },
            &flat,
            1e-6,
        );
        let exact: Vec<f64> = grad.a.iter().chain(grad.w.iter()).copied().collect();
        for (g, f) in exact.iter().zip(&fd) {
            assert!(fdcheck::rel_err(*g, *f) < 1e-6, "penalty gradient {g} vs fd {f}");
        }
        // zero parameters sit at the subgradient convention point
        let zero = TwoLayerParams::zeros(2, 2).unwrap();
        assert!(grad_regularizer(&zero, 2.5, 50).is_zero());
    }

    #[test]
    fn penalty_invariant_under_neuron_permutation() {
        let theta = TwoLayerParams::new(1, vec![0.5, -0.3, 0.8], vec![1.0, -2.0, 0.5]).unwrap();
        let perm = TwoLayerParams::new(1, vec![0.8, 0.5, -0.3], vec![0.5, 1.0, -2.0]).unwrap();
        assert_eq!(
            path_norm_penalty(&theta, 3.0, 10),
            path_norm_penalty(&perm, 3.0, 10)
        );
    }

    #[test]
    fn augmented_training_gradient_matches_finite_differences() {
        // the value-pinning case couples h2 to the network through phi~(b);
        // finite differences of the assembled objective check the chain rule
        let problem = PdeProblem::new(
            CoefficientField::constant(1, 2.0, vec![1.0], vec![0.5], 0.75).unwrap(),
            Arc::new(|x: &[f64]| (x[0] * 2.0).cos() * 0.5),
        );
        let aug = BoundaryAugmentation::mixed(0.0, 1.0, 0.4, -0.2, 2.0).unwrap();
        let tp = transform_operator(&problem, &aug).unwrap();
        let samples = SampleSet::uniform(6, 1, 3).unwrap();
        let cache = SampleCache::build(&samples, tp.problem()).unwrap();
        let obj = Objective {
            samples: samples.clone(),
            cache,
            extra_ops: tp.extra_operator_values(&samples).unwrap(),
            coupling: match (tp.coupling_point(), tp.coupling_values(&samples).unwrap()) {
                (Some(b), Some(v)) => Some((b, v)),
                _ => None,
            },
            lambda: 0.0,
        };
        let theta = init_params(8, 1, 0.5, 21).unwrap();
        let e = obj.residuals(&theta, &[]).unwrap();
        let (grad, extra_grads) = obj.gradients(&theta, &e).unwrap();
        assert!(extra_grads.is_empty());
        let m = theta.width();
        let flat: Vec<f64> = theta.a.iter().chain(theta.w.iter()).copied().collect();
        let fd = fdcheck::grad_fd(
            |v: &[f64]| {
                let t = TwoLayerParams::new(1, v[..m].to_vec(), v[m..].to_vec()).unwrap();
                let e = obj.residuals(&t, &[]).unwrap();
                risk_from_residuals(&e)
            },
            &flat,
            1e-6,
        );
        let exact: Vec<f64> = grad.a.iter().chain(grad.w.iter()).copied().collect();
        for (g, f) in exact.iter().zip(&fd) {
            assert!(fdcheck::rel_err(*g, *f) < 1e-6, "coupled gradient {g} vs fd {f}");
        }
    }

    #[test]
    fn extra_scalar_gradients_match_finite_differences() {
        let problem = PdeProblem::new(
            CoefficientField::constant(1, 2.0, vec![1.0], vec![-0.25], 0.5).unwrap(),
            Arc::new(|x: &[f64]| x[0] * 0.5),
        );
        let aug = BoundaryAugmentation::neumann(0.0, 1.0, 0.3, -0.1, 2.0, 2.0)
            .unwrap()
            .with_extras(0.2, -0.4);
        let tp = transform_operator(&problem, &aug).unwrap();
        let samples = SampleSet::uniform(7, 1, 5).unwrap();
        let cache = SampleCache::build(&samples, tp.problem()).unwrap();
        let obj = Objective {
            samples: samples.clone(),
            cache,
            extra_ops: tp.extra_operator_values(&samples).unwrap(),
            coupling: None,
            lambda: 0.0,
        };
        let theta = init_params(6, 1, 0.4, 33).unwrap();
        let extras = tp.initial_extras();
        let e = obj.residuals(&theta, &extras).unwrap();
        let (_, extra_grads) = obj.gradients(&theta, &e).unwrap();
        assert_eq!(extra_grads.len(), 2);
        let fd = fdcheck::grad_fd(
            |c: &[f64]| {
                let e = obj.residuals(&theta, c).unwrap();
                risk_from_residuals(&e)
            },
            &extras,
            1e-6,
        );
        for (g, f) in extra_grads.iter().zip(&fd) {
            assert!(fdcheck::rel_err(*g, *f) < 1e-6, "extra gradient {g} vs fd {f}");
        }
    }

    #[test]
    fn trace_csv_round_trip_structure() {
        let trace = TrainingTrace {
            records: vec![
                TraceRecord {
                    step: 0,
                    t: 0.0,
                    risk: 0.5,
                    path_norm: 1.25,
                    max_da: 0.0,
                    max_dw: 0.0,
                    lambda_min: Some(0.125),
                    gram_drift: Some(0.0),
                },
                TraceRecord {
                    step: 10,
                    t: 0.1,
                    risk: 0.25,
                    path_norm: 1.5,
                    max_da: 0.02,
                    max_dw: 0.04,
                    lambda_min: None,
                    gram_drift: None,
                },
            ],
        };
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,t,risk,path_norm,max_da,max_dw,lambda_min,gram_drift"
        );
        let row0 = lines.next().unwrap();
        assert!(row0.starts_with("0,"));
        assert!(row0.contains("1.2500000000000000e-1"));
        let row1 = lines.next().unwrap();
        assert!(row1.ends_with(",,"), "optional fields must serialize empty: {row1}");
        assert_eq!(row1.split(',').count(), 8);
    }

    #[test]
    fn config_validation() {
        let problem = PdeProblem::new(CoefficientField::laplacian(1), Arc::new(|_: &[f64]| 0.0));
        let samples = SampleSet::uniform(3, 1, 1).unwrap();
        let mut odd_asi = TrainConfig::new(7, 5, 1);
        odd_asi.asi = true;
        assert!(train(&problem, &samples, &odd_asi, None).is_err());
        let mut bad_gamma = TrainConfig::new(8, 5, 1);
        bad_gamma.gamma = Some(1.5);
        assert!(train(&problem, &samples, &bad_gamma, None).is_err());
        let mut bad_lr = TrainConfig::new(8, 5, 1);
        bad_lr.learning_rate = Some(-0.1);
        assert!(train(&problem, &samples, &bad_lr, None).is_err());
        let mut bad_lambda = TrainConfig::new(8, 5, 1);
        bad_lambda.lambda = -1.0;
        assert!(train(&problem, &samples, &bad_lambda, None).is_err());
        assert!(train(&problem, &samples, &TrainConfig::new(0, 5, 1), None).is_err());
    }

    #[test]
    fn trace_thinning_keeps_endpoints() {
        let problem = PdeProblem::new(
            CoefficientField::laplacian(1),
            Arc::new(|x: &[f64]| x[0] * 0.25),
        );
        let samples = SampleSet::uniform(3, 1, 6).unwrap();
        let mut config = TrainConfig::new(16, 2500, 9);
        config.learning_rate = Some(1e-4);
        let result = train(&problem, &samples, &config, None).unwrap();
        let records = &result.trace.records;
        assert_eq!(records.first().unwrap().step, 0);
        assert_eq!(records.last().unwrap().step, 2500);
        // cadence ceil(2500/1000) = 3
        assert!(records.len() <= 1002);
        for pair in records.windows(2) {
            assert!(pair[1].step > pair[0].step);
        }
        // flow time tracks step * lr
        for r in records {
            assert_eq!(r.t, r.step as f64 * 1e-4);
        }
    }
}
