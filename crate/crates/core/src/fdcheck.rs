//! Finite-difference reference evaluators.
//!
//! Everything here works on opaque closures and never calls the analytic
//! gradient or operator paths, so it serves as an independent oracle for
//! them. Step sizes are chosen by the callers; the usual trade-offs apply
//! (truncation vs roundoff), and the higher-order stencils exist for checks
//! that need absolute accuracy near 1e-9.
//!
//! All checks in this crate that compare an analytic value against a
//! finite-difference value use [`rel_err`], which floors the denominator at
//! 1 so that near-zero pairs (dead neurons, inactive regions) are compared
//! absolutely instead of amplifying roundoff.

use crate::problem::PointCoefficients;

/// `|a - b| / max(|a|, |b|, 1)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Central-difference gradient of a scalar function of `n` variables.
pub fn grad_fd(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = xi + h;
        let fp = f(&xp);
        xp[i] = xi - h;
        let fm = f(&xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Central first derivative of a univariate function.
pub fn deriv1_fd(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central second derivative (3-point) of a univariate function.
pub fn deriv2_fd(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Fourth-order 5-point second derivative; use when the plain stencil's
/// `O(eps/h^2)` roundoff would swamp a tight absolute tolerance.
pub fn deriv2_fd5(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

/// Mixed second partial `d2f/dx_i dx_j` by central differences.
pub fn second_partial_fd(f: &impl Fn(&[f64]) -> f64, x: &[f64], i: usize, j: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    if i == j {
        let fp = {
            xp[i] = x[i] + h;
            f(&xp)
        };
        let fm = {
            xp[i] = x[i] - h;
            f(&xp)
        };
        xp[i] = x[i];
        (fp - 2.0 * f(&xp) + fm) / (h * h)
    } else {
        let mut eval = |si: f64, sj: f64| {
            xp[i] = x[i] + si * h;
            xp[j] = x[j] + sj * h;
            let v = f(&xp);
            xp[i] = x[i];
            xp[j] = x[j];
            v
        };
        (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * h * h)
    }
}

/// Apply the operator `L = sum A_ab d2/dx_a dx_b + sum b_a d/dx_a + c` to an
/// arbitrary function by finite differences, with coefficients already
/// evaluated at `x`.
pub fn l_apply_fd(f: impl Fn(&[f64]) -> f64, x: &[f64], co: &PointCoefficients, h: f64) -> f64 {
    let d = x.len();
    let mut acc = co.c * f(x);
    let grad = grad_fd(&f, x, h);
    for (alpha, g) in grad.iter().enumerate() {
        acc += co.b[alpha] * g;
    }
    for alpha in 0..d {
        for beta in 0..d {
            let a = co.a[alpha * d + beta];
            if a != 0.0 {
                acc += a * second_partial_fd(&f, x, alpha, beta, h);
            }
        }
    }
    acc
}

/// Fourth-order variant of [`l_apply_fd`] for 1-d functions, used where the
/// comparison tolerance is a tight absolute 1e-8.
pub fn l_apply_fd5_1d(f: impl Fn(f64) -> f64, x: f64, co: &PointCoefficients, h: f64) -> f64 {
    let d1 = (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
    let d2 = deriv2_fd5(&f, x, h);
    co.a[0] * d2 + co.b[0] * d1 + co.c * f(x)
}
