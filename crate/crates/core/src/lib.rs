//! Numerics for training two-layer networks on second-order PDE residuals.
//!
//! The model is a two-layer network with cubic-ramp activation; the loss is
//! a least-squares fit of its image under a linear second-order operator
//! `L u = sum A_ab u_xa_xb + sum b_a u_xa + c u` to a right-hand side on
//! sampled interior points of the unit cube. The crate provides:
//!
//! - exact evaluation and gradients of the empirical operator risk
//!   ([`operator`]), with Monte Carlo population-risk estimates;
//! - the tangent-kernel machinery ([`ntk`]): per-sample Gram matrices, their
//!   infinite-width kernels, minimum-eigenvalue estimates, and the drift
//!   monitor that checks training stays in the kernel regime;
//! - gradient-descent training with paired symmetric initialization,
//!   backtracking step-size selection, optional path-norm penalty, and a
//!   deterministic trace ([`training`]);
//! - one-dimensional boundary handling by ansatz substitution and the
//!   induced operator transform, plus a time-axis lift for evolution
//!   problems ([`boundary`]);
//! - finite atomic target representations with sampled-network
//!   approximation experiments ([`barron`]);
//! - closed-form width, initialization, drift, and generalization bounds
//!   ([`bounds`]).
//!
//! All stochastic code takes explicit seeds and all reductions run in fixed
//! index order, so every result in this crate is bit-reproducible across
//! thread counts.

/// Crate version, for run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod barron;
pub mod boundary;
pub mod bounds;
pub mod error;
pub mod expr;
pub mod fdcheck;
pub mod linalg;
pub mod ntk;
pub mod operator;
pub mod params;
pub mod problem;
pub mod seeds;
pub mod training;

pub use barron::{
    approximation_bound, approximation_experiment, reference_representation, ApproxRow,
    ApproxTable, BarronAtom, BarronRepresentation, NormalizationPolicy,
};
pub use boundary::{
    lift_time_dependent, transform_operator, AugmentationKind, BoundaryAugmentation, TimeKind,
    TransformedProblem,
};
pub use bounds::{
    drift_bound_q, init_bound_params, initial_risk_bound, min_admissible_lambda,
    posterior_gap_bound, prior_bound, rademacher_bound, reports_to_csv, reports_to_text,
    required_width, BoundReport, DeltaReading, InitBounds,
};
pub use error::{CoreError, Result};
pub use expr::{Expr, ExprError};
pub use linalg::{jacobi_eigen, lambda_min_pair, Matrix, SymmetricEigen};
pub use ntk::{
    c_d_mc, drift_monitor, gram_a, gram_w, kernel_a_mc, lambda_hat_s, lambda_min,
    GramDiagnostics, LambdaHat, C_D_EXACT_1D,
};
pub use operator::{
    empirical_risk, eval_l_phi, eval_phi, grad_risk, path_norm, population_risk_mc, residuals,
};
pub use params::{RiskGradient, TwoLayerParams};
pub use problem::{CoefficientField, PdeProblem, PointCoefficients, SampleSet};
pub use training::{
    asi_init, default_gamma, gd_step, init_params, path_norm_penalty, regularized_objective,
    train, TraceRecord, TrainConfig, TrainResult, TrainingTrace,
};
