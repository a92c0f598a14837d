use thiserror::Error;

/// Errors surfaced by the numerical core.
///
/// Validation happens lazily: coefficient fields and right-hand sides are
/// arbitrary callables, so bound and symmetry violations can only be caught
/// at the points where they are actually evaluated.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty sample set")]
    EmptySampleSet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient matrix asymmetric at evaluation point: |a[{i}][{j}] - a[{j}][{i}]| = {diff:e}")]
    AsymmetricCoefficient { i: usize, j: usize, diff: f64 },

    #[error("coefficient entry {value:e} exceeds declared bound {bound:e}")]
    CoefficientBound { value: f64, bound: f64 },

    #[error("right-hand side value {value:e} exceeds declared bound {bound:e}")]
    RhsBound { value: f64, bound: f64 },

    #[error("training diverged at step {step}: risk {risk:e} exceeds 1e6 x initial risk {initial:e}")]
    Diverged { step: usize, risk: f64, initial: f64 },

    #[error("non-finite parameter entries after step {step}")]
    NonFinite { step: usize },

    #[error("backtracking from lr={start:e} found no risk-decreasing step after {halvings} halvings")]
    BacktrackFailed { start: f64, halvings: u32 },

    #[error("matrix is not symmetric: |m[{i}][{j}] - m[{j}][{i}]| = {diff:e}")]
    AsymmetricMatrix { i: usize, j: usize, diff: f64 },

    #[error("eigensolver did not reach the off-diagonal tolerance in {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("{0}")]
    InvalidRepresentation(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
