//! Finite atomic target representations and the width-scaling experiment.
//!
//! A target is specified as a finite mixture of neurons: atoms
//! `(a_i, w_i, p_i)` with probabilities `p_i` summing to 1 induce
//!
//! ```text
//! f(x) = sum_i p_i a_i T(w_i, x),
//! ```
//!
//! `T` being the per-neuron operator image under a reference coefficient
//! field. Such targets are exactly the ones a width-`m` network can match at
//! rate `O(1/m)`: drawing `m` atoms i.i.d. from the mixture and setting outer
//! weights `a_k / m` gives an unbiased estimator of `f` whose population risk
//! decays like the representation-norm bound `6 M^2 B^2 / m`, where
//!
//! ```text
//! B = (sum_i p_i a_i^2 ||w_i||_1^6)^{1/2}
//! ```
//!
//! is the norm of *this* representation (an upper bound on the best-over-
//! representations norm, which is all the downstream bounds need since they
//! are monotone in `B`). Construction enforces the standing `|f| <= 1`
//! assumption on a ~10^4-point grid, either rejecting or rescaling.

use crate::error::{CoreError, Result};
use crate::operator::{mean_and_std_err, neuron_operator, population_risk_mc};
use crate::params::TwoLayerParams;
use crate::problem::{CoefficientField, PdeProblem};
use crate::seeds;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// One mixture component: outer weight, inner weight vector, probability.
#[derive(Debug, Clone, PartialEq)]
pub struct BarronAtom {
    pub a: f64,
    pub w: Vec<f64>,
    pub p: f64,
}

/// What to do when the induced target exceeds the standing `|f| <= 1` bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationPolicy {
    /// Fail construction.
    Reject,
    /// Scale every outer weight so the grid maximum is 1 (with a small
    /// safety margin against between-grid overshoot).
    Rescale,
}

/// Finite atomic mixture together with its reference coefficient field.
#[derive(Debug, Clone)]
pub struct BarronRepresentation {
    dim: usize,
    atoms: Vec<BarronAtom>,
    coeffs: CoefficientField,
}

const GRID_TARGET: f64 = 1e4;
const RESCALE_MARGIN: f64 = 1e-6;

impl BarronRepresentation {
    /// Validate probabilities, shapes, and the `|f| <= 1` grid bound.
    pub fn new(
        atoms: Vec<BarronAtom>,
        coeffs: CoefficientField,
        policy: NormalizationPolicy,
    ) -> Result<Self> {
        let dim = coeffs.dim();
        if atoms.is_empty() {
            return Err(CoreError::InvalidRepresentation("need at least one atom".into()));
        }
        for (i, atom) in atoms.iter().enumerate() {
            if atom.w.len() != dim {
                return Err(CoreError::InvalidRepresentation(format!(
                    "atom {i} has inner dimension {}, field has dimension {dim}",
                    atom.w.len()
                )));
            }
            if !(atom.p >= 0.0) {
                return Err(CoreError::InvalidRepresentation(format!(
                    "atom {i} has negative probability {}",
                    atom.p
                )));
            }
            if !atom.a.is_finite() || !atom.w.iter().all(|v| v.is_finite()) {
                return Err(CoreError::InvalidRepresentation(format!("atom {i} is not finite")));
            }
        }
        let total: f64 = atoms.iter().map(|atom| atom.p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidRepresentation(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let mut rep = Self { dim, atoms, coeffs };
        let max_abs = rep.grid_max_abs()?;
        if max_abs > 1.0 {
            match policy {
                NormalizationPolicy::Reject => {
                    return Err(CoreError::InvalidRepresentation(format!(
                        "induced target reaches |f| = {max_abs} > 1 on the check grid"
                    )));
                }
                NormalizationPolicy::Rescale => {
                    let scale = (1.0 - RESCALE_MARGIN) / max_abs;
                    for atom in &mut rep.atoms {
                        atom.a *= scale;
                    }
                }
            }
        }
        Ok(rep)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[BarronAtom] {
        &self.atoms
    }

    pub fn coeffs(&self) -> &CoefficientField {
        &self.coeffs
    }

    /// Max |f| over a grid of about 10^4 points (`ceil(10^{4/d})` per axis).
    fn grid_max_abs(&self) -> Result<f64> {
        let per_axis = GRID_TARGET.powf(1.0 / self.dim as f64).ceil() as usize;
        let per_axis = per_axis.max(2);
        let mut x = vec![0.0; self.dim];
        let mut idx = vec![0usize; self.dim];
        let mut max_abs: f64 = 0.0;
        loop {
            for (xi, &i) in x.iter_mut().zip(idx.iter()) {
                *xi = i as f64 / (per_axis - 1) as f64;
            }
            max_abs = max_abs.max(self.induced_value(&x)?.abs());
            // odometer increment over the grid
            let mut axis = 0;
            loop {
                if axis == self.dim {
                    return Ok(max_abs);
                }
                idx[axis] += 1;
                if idx[axis] < per_axis {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
    }

    /// The induced target `f(x) = sum_i p_i a_i T(w_i, x)`.
    pub fn induced_value(&self, x: &[f64]) -> Result<f64> {
        let co = self.coeffs.eval_at(x)?;
        let mut acc = 0.0;
        for atom in &self.atoms {
            acc += (atom.p * atom.a) * neuron_operator(&atom.w, x, &co);
        }
        Ok(acc)
    }

    /// Representation norm `(sum_i p_i a_i^2 ||w_i||_1^6)^{1/2}`.
    pub fn barron_norm(&self) -> f64 {
        let mut acc = 0.0;
        for atom in &self.atoms {
            let l1: f64 = atom.w.iter().map(|v| v.abs()).sum();
            let l13 = l1 * l1 * l1;
            acc += atom.p * atom.a * atom.a * l13 * l13;
        }
        acc.sqrt()
    }

    /// The width-`K` network whose operator image *is* the induced target
    /// (outer weights `p_i a_i`), summed in atom order.
    pub fn equivalent_network(&self) -> TwoLayerParams {
        let a: Vec<f64> = self.atoms.iter().map(|atom| atom.p * atom.a).collect();
        let w: Vec<f64> = self.atoms.iter().flat_map(|atom| atom.w.iter().copied()).collect();
        TwoLayerParams::new(self.dim, a, w).expect("validated atoms form valid parameters")
    }

    /// Problem whose right-hand side is the induced target.
    pub fn to_problem(&self) -> PdeProblem {
        let rep = self.clone();
        PdeProblem::new(
            self.coeffs.clone(),
            Arc::new(move |x: &[f64]| {
                rep.induced_value(x).expect("coefficients must evaluate on the domain")
            }),
        )
    }

    /// Monte Carlo network of width `m`: draw `m` atoms i.i.d. from the
    /// mixture and set outer weights `a_k / m`.
    pub fn sample_network(&self, m: usize, seed: u64) -> Result<TwoLayerParams> {
        if m == 0 {
            return Err(CoreError::InvalidParameter("width must be >= 1".into()));
        }
        let cdf: Vec<f64> = self
            .atoms
            .iter()
            .scan(0.0, |acc, atom| {
                *acc += atom.p;
                Some(*acc)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Vec::with_capacity(m);
        let mut w = Vec::with_capacity(m * self.dim);
        for _ in 0..m {
            let u: f64 = rng.random();
            let idx = cdf.iter().position(|&c| u < c).unwrap_or(self.atoms.len() - 1);
            a.push(self.atoms[idx].a / m as f64);
            w.extend_from_slice(&self.atoms[idx].w);
        }
        TwoLayerParams::new(self.dim, a, w)
    }
}

/// One width's row in the scaling experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxRow {
    pub width: usize,
    /// Mean over seeds of the MC population risk of the sampled network.
    pub mean_risk: f64,
    pub std_err: f64,
    /// Norm-based rate bound `6 M^2 B^2 / m`.
    pub bound: f64,
}

/// Scaling-experiment output: one row per width and the fitted log-log slope
/// of mean risk against width (`None` when fewer than two positive means).
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxTable {
    pub rows: Vec<ApproxRow>,
    pub slope: Option<f64>,
}

impl ApproxTable {
    /// CSV with a header row, floats at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("width,mean_risk,std_err,bound\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                r.width, r.mean_risk, r.std_err, r.bound
            ));
        }
        out
    }
}

/// Rate bound `6 M^2 B^2 / m` for a width-`m` sampled network.
pub fn approximation_bound(coeff_bound: f64, barron_norm: f64, width: usize) -> f64 {
    6.0 * coeff_bound * coeff_bound * barron_norm * barron_norm / width as f64
}

/// For each width, draw `seeds_per_width` networks, estimate their population
/// risks with `num_mc` points each, and tabulate means against the rate
/// bound. Seeds derive deterministically from `base_seed`.
pub fn approximation_experiment(
    rep: &BarronRepresentation,
    widths: &[usize],
    seeds_per_width: usize,
    num_mc: usize,
    base_seed: u64,
) -> Result<ApproxTable> {
    if widths.is_empty() {
        return Err(CoreError::InvalidParameter("need at least one width".into()));
    }
    if !widths.windows(2).all(|p| p[0] < p[1]) {
        return Err(CoreError::InvalidParameter("widths must be strictly increasing".into()));
    }
    if seeds_per_width == 0 {
        return Err(CoreError::InvalidParameter("need at least one seed per width".into()));
    }
    let problem = rep.to_problem();
    let bnorm = rep.barron_norm();
    let m_bound = rep.coeffs().bound();
    let mut rows = Vec::with_capacity(widths.len());
    for (wi, &width) in widths.iter().enumerate() {
        let risks: Vec<f64> = (0..seeds_per_width)
            .map(|j| -> Result<f64> {
                let cell = (wi * seeds_per_width + j) as u64;
                let theta = rep.sample_network(width, seeds::derive(base_seed, 2 * cell))?;
                let (risk, _) =
                    population_risk_mc(&theta, &problem, num_mc, seeds::derive(base_seed, 2 * cell + 1))?;
                Ok(risk)
            })
            .collect::<Result<_>>()?;
        let (mean_risk, std_err) = mean_and_std_err(&risks);
        rows.push(ApproxRow {
            width,
            mean_risk,
            std_err,
            bound: approximation_bound(m_bound, bnorm, width),
        });
    }
    Ok(ApproxTable { slope: fit_log_slope(&rows), rows })
}

/// Least-squares slope of `log(mean_risk)` against `log(width)`.
fn fit_log_slope(rows: &[ApproxRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mean_risk > 0.0)
        .map(|r| ((r.width as f64).ln(), r.mean_risk.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Three-atom one-dimensional reference mixture used across experiments:
/// equal weights on `(0.9, 1.0)`, `(-0.5, 1.2)`, `(0.3, 0.8)` under the
/// Laplacian, inducing `f(x) = 0.0632 x`.
pub fn reference_representation() -> BarronRepresentation {
    let third = 1.0 / 3.0;
    BarronRepresentation::new(
        vec![
            BarronAtom { a: 0.9, w: vec![1.0], p: third },
            BarronAtom { a: -0.5, w: vec![1.2], p: third },
            BarronAtom { a: 0.3, w: vec![0.8], p: third },
        ],
        CoefficientField::laplacian(1),
        NormalizationPolicy::Reject,
    )
    .expect("reference mixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{eval_l_phi, path_norm};

    fn single_atom(a: f64, w: Vec<f64>) -> BarronRepresentation {
        let d = w.len();
        BarronRepresentation::new(
            vec![BarronAtom { a, w, p: 1.0 }],
            CoefficientField::laplacian(d),
            NormalizationPolicy::Reject,
        )
        .unwrap()
    }

    #[test]
    fn norm_closed_forms() {
        assert_eq!(single_atom(1.0, vec![1.0]).barron_norm(), 1.0);
        // a=2, w=(1,1): sqrt(4 * 2^6) = 16; |f| stays below 1 because the
        // operator image peaks at 2*2*2/... check: T = |w|^2 sigma''(wx) <= 2*2
        // — too big, so shrink the outer weight and scale the norm with it
        let rep = BarronRepresentation::new(
            vec![BarronAtom { a: 0.1, w: vec![1.0, 1.0], p: 1.0 }],
            CoefficientField::laplacian(2),
            NormalizationPolicy::Reject,
        )
        .unwrap();
        assert!((rep.barron_norm() - 0.8).abs() <= 1e-15); // sqrt(0.01 * 64)
        // reference value
        assert!(
            (reference_representation().barron_norm() - 0.7257384652889772).abs() <= 1e-15
        );
    }

    #[test]
    fn norm_invariant_under_cubic_rescale() {
        let rep = reference_representation();
        let s: f64 = 2.0;
        let rescaled = BarronRepresentation::new(
            rep.atoms()
                .iter()
                .map(|atom| BarronAtom {
                    a: atom.a / (s * s * s),
                    w: atom.w.iter().map(|v| v * s).collect(),
                    p: atom.p,
                })
                .collect(),
            rep.coeffs().clone(),
            NormalizationPolicy::Reject,
        )
        .unwrap();
        assert!((rep.barron_norm() - rescaled.barron_norm()).abs() <= 1e-12);
        // the induced target is unchanged too
        for &x in &[0.0, 0.3, 0.7, 1.0] {
            let f0 = rep.induced_value(&[x]).unwrap();
            let f1 = rescaled.induced_value(&[x]).unwrap();
            assert!((f0 - f1).abs() <= 1e-12 * f0.abs().max(1.0));
        }
    }

    #[test]
    fn invalid_mixtures_rejected() {
        let coeffs = CoefficientField::laplacian(1);
        // probabilities must sum to 1
        let bad_sum = BarronRepresentation::new(
            vec![BarronAtom { a: 0.1, w: vec![1.0], p: 0.6 }],
            coeffs.clone(),
            NormalizationPolicy::Reject,
        );
        assert!(matches!(bad_sum, Err(CoreError::InvalidRepresentation(_))));
        // probabilities must be nonnegative
        let bad_p = BarronRepresentation::new(
            vec![
                BarronAtom { a: 0.1, w: vec![1.0], p: 1.5 },
                BarronAtom { a: 0.1, w: vec![1.0], p: -0.5 },
            ],
            coeffs.clone(),
            NormalizationPolicy::Reject,
        );
        assert!(bad_p.is_err());
        // dimension mismatch
        let bad_dim = BarronRepresentation::new(
            vec![BarronAtom { a: 0.1, w: vec![1.0, 2.0], p: 1.0 }],
            coeffs,
            NormalizationPolicy::Reject,
        );
        assert!(bad_dim.is_err());
    }

    #[test]
    fn oversized_targets_reject_or_rescale() {
        let coeffs = CoefficientField::laplacian(1);
        // a=3, w=1: f(x) = 3x peaks at 3 > 1
        let atoms = vec![BarronAtom { a: 3.0, w: vec![1.0], p: 1.0 }];
        let rejected =
            BarronRepresentation::new(atoms.clone(), coeffs.clone(), NormalizationPolicy::Reject);
        assert!(matches!(rejected, Err(CoreError::InvalidRepresentation(_))));
        let rescaled =
            BarronRepresentation::new(atoms, coeffs, NormalizationPolicy::Rescale).unwrap();
        let peak = rescaled.induced_value(&[1.0]).unwrap();
        assert!(peak <= 1.0 && peak > 0.999, "rescaled peak {peak}");
        // the norm shrinks by the same factor as the outer weights
        assert!((rescaled.barron_norm() - (1.0 - 1e-6)).abs() <= 1e-12);
    }

    #[test]
    fn induced_target_equals_equivalent_network() {
        let rep = reference_representation();
        let net = rep.equivalent_network();
        let coeffs = rep.coeffs();
        for i in 0..50 {
            let x = [i as f64 / 49.0];
            let f = rep.induced_value(&x).unwrap();
            let lphi = eval_l_phi(&net, &x, coeffs).unwrap();
            assert!((f - lphi).abs() <= 1e-12, "{f} vs {lphi} at {}", x[0]);
        }
        // reference slope: f(x) = 0.0632 x
        let f = rep.induced_value(&[1.0]).unwrap();
        assert!((f - 0.0632).abs() <= 1e-15, "slope {f}");
    }

    #[test]
    fn degenerate_mixture_reproduces_target_at_any_width() {
        let rep = single_atom(0.4, vec![1.0]);
        let problem = rep.to_problem();
        for &m in &[1usize, 3, 8] {
            let theta = rep.sample_network(m, 5).unwrap();
            assert_eq!(theta.width(), m);
            let (risk, _) = population_risk_mc(&theta, &problem, 500, 7).unwrap();
            assert!(risk <= 1e-25, "width {m} risk {risk}");
        }
    }

    #[test]
    fn sampled_width_one_is_one_atom() {
        let rep = reference_representation();
        let theta = rep.sample_network(1, 3).unwrap();
        assert_eq!(theta.width(), 1);
        let atom_match = rep
            .atoms()
            .iter()
            .any(|atom| theta.a[0] == atom.a && theta.w_row(0) == atom.w.as_slice());
        assert!(atom_match, "width-1 draw must be a single atom with unscaled outer weight");
    }

    #[test]
    fn expected_path_norm_bounded_by_representation_norm() {
        let rep = reference_representation();
        let bnorm = rep.barron_norm();
        let values: Vec<f64> = (0..1000)
            .map(|s| path_norm(&rep.sample_network(64, 1000 + s).unwrap()))
            .collect();
        let (mean, se) = mean_and_std_err(&values);
        // E path_norm = E |a| ||w||_1^3 <= B by Cauchy-Schwarz
        assert!(
            mean <= bnorm + 4.0 * se,
            "mean sampled path norm {mean} (se {se}) exceeds norm {bnorm}"
        );
        // exact expectation for this mixture
        let expect: f64 = rep
            .atoms()
            .iter()
            .map(|atom| {
                let l1: f64 = atom.w.iter().map(|v| v.abs()).sum();
                atom.p * atom.a.abs() * l1 * l1 * l1
            })
            .sum();
        assert!((mean - expect).abs() <= 4.0 * se, "mean {mean} expect {expect} se {se}");
    }

    #[test]
    fn scaling_experiment_rows_and_slope() {
        let rep = reference_representation();
        let table = approximation_experiment(&rep, &[4, 16, 64], 6, 400, 99).unwrap();
        assert_eq!(table.rows.len(), 3);
        // risk decays with width
        assert!(table.rows[0].mean_risk > table.rows[1].mean_risk);
        assert!(table.rows[1].mean_risk > table.rows[2].mean_risk);
        // bound 6 M^2 B^2 / m with M = 1
        let b2 = rep.barron_norm().powi(2);
        for row in &table.rows {
            assert!((row.bound - 6.0 * b2 / row.width as f64).abs() <= 1e-15);
            assert!(
                row.mean_risk <= row.bound + 3.0 * row.std_err,
                "width {}: mean {} exceeds bound {}",
                row.width,
                row.mean_risk,
                row.bound
            );
        }
        let slope = table.slope.unwrap();
        assert!((-1.6..=-0.4).contains(&slope), "slope {slope}");
        // determinism
        let again = approximation_experiment(&rep, &[4, 16, 64], 6, 400, 99).unwrap();
        assert_eq!(table, again);
        // CSV structure
        let csv = table.to_csv();
        assert!(csv.starts_with("width,mean_risk,std_err,bound\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn experiment_input_validation() {
        let rep = reference_representation();
        assert!(approximation_experiment(&rep, &[], 5, 100, 1).is_err());
        assert!(approximation_experiment(&rep, &[8, 8], 5, 100, 1).is_err());
        assert!(approximation_experiment(&rep, &[16, 8], 5, 100, 1).is_err());
        assert!(approximation_experiment(&rep, &[8], 0, 100, 1).is_err());
    }
}
