//! Tangent-kernel diagnostics for the operator least-squares dynamics.
//!
//! For one neuron, write `T(w, x)` for the per-neuron operator value, so
//! that `L phi = sum_k a_k T(w_k, .)`. The outer-weight kernel and the
//! inner-weight kernel are
//!
//! ```text
//! g_a(w; x, x')    = T(w, x) T(w, x')
//! g_w(a, w; x, x') = a^2 grad_w T(w, x) . grad_w T(w, x')
//! ```
//!
//! and the width-averaged Gram matrices `G_a, G_w` (entries
//! `1/m sum_k g(...; x_i, x_j)`) tie the gradient norm to the residual:
//! `||grad R||^2 = (m/n^2) e' (G_a + G_w) e`. That identity, the
//! infinite-width limit `K_a = E_w g_a`, and the Frobenius drift of `G_a`
//! along training are what the convergence story measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::linalg::{lambda_min_pair, Matrix};
use crate::operator::{mean_and_std_err, neuron_operator, neuron_operator_grad};
use crate::params::TwoLayerParams;
use crate::problem::{CoefficientField, PointCoefficients, SampleSet};

/// Exact value of `E ||w||_1^12` for `w ~ N(0, I_1)`: the 12th absolute
/// moment of a standard normal, `11!! = 10395`.
pub const C_D_EXACT_1D: f64 = 10395.0;

/// Outer-weight kernel `g_a(w; x, x') = T(w,x) T(w,x')`.
pub fn g_a(w: &[f64], x: &[f64], x2: &[f64], coeffs: &CoefficientField) -> Result<f64> {
    check_dims(&[w.len(), x.len(), x2.len()], coeffs)?;
    let co1 = coeffs.eval_at(x)?;
    let co2 = coeffs.eval_at(x2)?;
    Ok(neuron_operator(w, x, &co1) * neuron_operator(w, x2, &co2))
}

/// Inner-weight kernel `g_w(a, w; x, x') = a^2 grad_w T(w,x) . grad_w T(w,x')`.
pub fn g_w(a: f64, w: &[f64], x: &[f64], x2: &[f64], coeffs: &CoefficientField) -> Result<f64> {
    check_dims(&[w.len(), x.len(), x2.len()], coeffs)?;
    let d = w.len();
    let co1 = coeffs.eval_at(x)?;
    let co2 = coeffs.eval_at(x2)?;
    let mut v1 = vec![0.0; d];
    let mut v2 = vec![0.0; d];
    neuron_operator_grad(w, x, &co1, &mut v1);
    neuron_operator_grad(w, x2, &co2, &mut v2);
    let dot: f64 = v1.iter().zip(&v2).map(|(p, q)| p * q).sum();
    Ok(a * a * dot)
}

fn check_dims(lens: &[usize], coeffs: &CoefficientField) -> Result<()> {
    for &l in lens {
        if l != coeffs.dim() {
            return Err(CoreError::DimensionMismatch(format!(
                "kernel argument has dimension {l}, coefficients have dimension {}",
                coeffs.dim()
            )));
        }
    }
    Ok(())
}

fn coeffs_at_samples(samples: &SampleSet, coeffs: &CoefficientField) -> Result<Vec<PointCoefficients>> {
    samples.iter().map(|x| coeffs.eval_at(x)).collect()
}

/// Outer-weight Gram matrix `G_a[i][j] = 1/m sum_k g_a(w_k; x_i, x_j)`.
pub fn gram_a(
    theta: &TwoLayerParams,
    samples: &SampleSet,
    coeffs: &CoefficientField,
) -> Result<Matrix> {
    if theta.dim() != coeffs.dim() || samples.dim() != coeffs.dim() {
        return Err(CoreError::DimensionMismatch(
            "gram_a: parameter/sample/coefficient dimensions disagree".into(),
        ));
    }
    let n = samples.len();
    let m = theta.width();
    let co = coeffs_at_samples(samples, coeffs)?;
    // T(w_k, x_i) table, parallel over neurons, each row in sample order
    let t: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|k| {
            let wk = theta.w_row(k);
            (0..n)
                .map(|i| neuron_operator(wk, samples.point(i), &co[i]))
                .collect::<Vec<f64>>()
        })
        .collect();
    let mut g = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for k in 0..m {
                acc += t[k * n + i] * t[k * n + j];
            }
            let v = acc / m as f64;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Inner-weight Gram matrix `G_w[i][j] = 1/m sum_k g_w(a_k, w_k; x_i, x_j)`.
pub fn gram_w(
    theta: &TwoLayerParams,
    samples: &SampleSet,
    coeffs: &CoefficientField,
) -> Result<Matrix> {
    if theta.dim() != coeffs.dim() || samples.dim() != coeffs.dim() {
        return Err(CoreError::DimensionMismatch(
            "gram_w: parameter/sample/coefficient dimensions disagree".into(),
        ));
    }
    let n = samples.len();
    let m = theta.width();
    let d = theta.dim();
    let co = coeffs_at_samples(samples, coeffs)?;
    // a_k * grad_w T(w_k, x_i) table, rows (k, i), columns the d components
    let v: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|k| {
            let wk = theta.w_row(k);
            let ak = theta.a[k];
            let mut row = vec![0.0; n * d];
            let mut buf = vec![0.0; d];
            for i in 0..n {
                neuron_operator_grad(wk, samples.point(i), &co[i], &mut buf);
                for alpha in 0..d {
                    row[i * d + alpha] = ak * buf[alpha];
                }
            }
            row
        })
        .collect();
    let mut g = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for k in 0..m {
                let vi = &v[(k * n + i) * d..(k * n + i) * d + d];
                let vj = &v[(k * n + j) * d..(k * n + j) * d + d];
                let dot: f64 = vi.iter().zip(vj).map(|(p, q)| p * q).sum();
                acc += dot;
            }
            let val = acc / m as f64;
            g[(i, j)] = val;
            g[(j, i)] = val;
        }
    }
    Ok(g)
}

/// Monte Carlo estimate of the infinite-width kernel
/// `K_a[i][j] = E_{w ~ N(0, I)} g_a(w; x_i, x_j)`.
///
/// Returns the estimate and a per-entry standard-error matrix. The same
/// `num_mc` Gaussian draws are shared across all entries, so the estimate is
/// exactly the Gram matrix of an `m = num_mc` standard-normal layer.
pub fn kernel_a_mc(
    samples: &SampleSet,
    coeffs: &CoefficientField,
    num_mc: usize,
    seed: u64,
) -> Result<(Matrix, Matrix)> {
    if samples.dim() != coeffs.dim() {
        return Err(CoreError::DimensionMismatch(
            "kernel_a_mc: sample/coefficient dimensions disagree".into(),
        ));
    }
    if num_mc < 2 {
        return Err(CoreError::InvalidParameter("num_mc must be >= 2".into()));
    }
    let n = samples.len();
    let d = samples.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..num_mc * d).map(|_| rng.sample(StandardNormal)).collect();
    let co = coeffs_at_samples(samples, coeffs)?;
    // T(w_s, x_i) table, parallel over draws
    let t: Vec<f64> = (0..num_mc)
        .into_par_iter()
        .flat_map_iter(|s| {
            let ws = &draws[s * d..(s + 1) * d];
            (0..n)
                .map(|i| neuron_operator(ws, samples.point(i), &co[i]))
                .collect::<Vec<f64>>()
        })
        .collect();
    let mut est = Matrix::zeros(n);
    let mut se = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut mean = 0.0;
            for s in 0..num_mc {
                mean += t[s * n + i] * t[s * n + j];
            }
            mean /= num_mc as f64;
            let mut ss = 0.0;
            for s in 0..num_mc {
                let dev = t[s * n + i] * t[s * n + j] - mean;
                ss += dev * dev;
            }
            let err = (ss / (num_mc as f64 - 1.0) / num_mc as f64).sqrt();
            est[(i, j)] = mean;
            est[(j, i)] = mean;
            se[(i, j)] = err;
            se[(j, i)] = err;
        }
    }
    Ok((est, se))
}

/// Smallest eigenvalue of a symmetric (Gram or kernel) matrix.
pub fn lambda_min(mat: &Matrix) -> Result<f64> {
    Ok(lambda_min_pair(mat)?.0)
}

/// Frobenius drift of the Gram matrix and membership in the stopping set
/// `{ ||G_a(theta) - G_a(theta0)||_F <= lambda_hat / 4 }` (closed: the
/// boundary counts as inside).
pub fn drift_monitor(g0: &Matrix, gt: &Matrix, lambda_hat: f64) -> (f64, bool) {
    let drift = g0.frobenius_distance(gt);
    (drift, drift <= lambda_hat / 4.0)
}

/// Working estimate of the smallest kernel eigenvalue with a first-order
/// Monte Carlo error bar (`v' dK v` for the minimizing eigenvector `v`).
#[derive(Debug, Clone)]
pub struct LambdaHat {
    pub value: f64,
    pub std_error: f64,
    /// `value > 3 * std_error`, the empirical positivity check. When false,
    /// downstream convergence-rate bounds are vacuous and callers warn.
    pub positive: bool,
}

/// Estimate `lambda_S = lambda_min(K_a)` from a Monte Carlo kernel estimate.
pub fn lambda_hat_s(
    samples: &SampleSet,
    coeffs: &CoefficientField,
    num_mc: usize,
    seed: u64,
) -> Result<LambdaHat> {
    let (k, se) = kernel_a_mc(samples, coeffs, num_mc, seed)?;
    let (value, v) = lambda_min_pair(&k)?;
    let n = k.n();
    // first-order perturbation: lambda ~ v' K v, the entry errors add as
    // independent terms v_i v_j SE_ij
    let mut var = 0.0;
    for i in 0..n {
        for j in 0..n {
            let t = v[i] * v[j] * se[(i, j)];
            var += t * t;
        }
    }
    let std_error = var.sqrt();
    let positive = value > 3.0 * std_error;
    if !positive {
        log::warn!(
            "smallest kernel eigenvalue {value:e} is not positive beyond 3 standard errors \
             ({std_error:e}); rate bounds that divide by it are vacuous"
        );
    }
    Ok(LambdaHat { value, std_error, positive })
}

/// Monte Carlo estimate of `C_d = E ||w||_1^12`, `w ~ N(0, I_d)`, with its
/// standard error. For `d = 1` the exact value is [`C_D_EXACT_1D`].
pub fn c_d_mc(d: usize, num_mc: usize, seed: u64) -> Result<(f64, f64)> {
    if d == 0 || num_mc < 2 {
        return Err(CoreError::InvalidParameter("need d >= 1 and num_mc >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..num_mc)
        .map(|_| {
            let mut l1 = 0.0;
            for _ in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                l1 += z.abs();
            }
            l1.powi(12)
        })
        .collect();
    Ok(mean_and_std_err(&values))
}

/// Snapshot of the kernel diagnostics for one parameter value.
#[derive(Debug, Clone)]
pub struct GramDiagnostics {
    pub gram_a: Matrix,
    pub gram_w: Option<Matrix>,
    pub lambda_min_a: f64,
}

impl GramDiagnostics {
    /// Assemble `G_a` (and optionally the costlier `G_w`) with the smallest
    /// eigenvalue of `G_a`.
    pub fn compute(
        theta: &TwoLayerParams,
        samples: &SampleSet,
        coeffs: &CoefficientField,
        with_gram_w: bool,
    ) -> Result<Self> {
        let ga = gram_a(theta, samples, coeffs)?;
        let lambda_min_a = lambda_min(&ga)?;
        let gw = if with_gram_w { Some(gram_w(theta, samples, coeffs)?) } else { None };
        Ok(Self { gram_a: ga, gram_w: gw, lambda_min_a })
    }
}
