//! TOML experiment configuration and its mapping onto core types.
//!
//! The file format is a single TOML document; coefficient and right-hand
//! side functions are given as expression strings in the grammar of
//! [`ntkpde_core::Expr`] (`+ - * / ^`, `sin`, `cos`, `exp`, numeric
//! constants, `pi`, coordinates `x1..xd`). Parsing is strict: unknown keys,
//! wrong shapes, expressions referencing coordinates beyond the declared
//! dimension, and a right-hand side given both as an expression and as an
//! atomic representation are all rejected at load time, before any
//! computation starts. A parsed configuration serializes back to an
//! equivalent document (`parse -> serialize -> parse` is the identity on
//! the parsed value).

use anyhow::{bail, Context, Result};
use ntkpde_core::{
    BarronAtom, BarronRepresentation, BoundaryAugmentation, CoefficientField, Expr,
    NormalizationPolicy, PdeProblem, TimeKind, TrainConfig,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Whole experiment description: problem, data, training, diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Global seed; all per-purpose seeds derive from it.
    pub seed: u64,
    /// Default output directory, overridable with `--out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub problem: ProblemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barron: Option<BarronConfig>,
    pub samples: SamplesConfig,
    pub train: TrainSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx: Option<ApproxConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
}

/// Operator coefficients and right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dim: usize,
    /// Declared sup bound `M >= 1` on coefficient entries.
    #[serde(default = "default_bound")]
    pub bound: f64,
    /// Row-major `dim x dim` second-order coefficient expressions;
    /// omitted means the identity matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<String>>,
    /// First-order coefficient expressions; omitted means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<String>>,
    /// Zeroth-order coefficient expression; omitted means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
    /// Right-hand side expression; mutually exclusive with `[barron]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<String>,
    #[serde(default = "default_rhs_bound")]
    pub rhs_bound: f64,
}

/// Right-hand side given as a finite atomic mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarronConfig {
    pub atoms: Vec<AtomConfig>,
    /// Rescale outer weights when the induced target exceeds 1 in absolute
    /// value, instead of rejecting the configuration.
    #[serde(default)]
    pub rescale: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub a: f64,
    pub w: Vec<f64>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesConfig {
    /// Number of interior sample points.
    pub n: usize,
}

/// Mirrors [`ntkpde_core::TrainConfig`] minus the seed, which is derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub width: usize,
    pub steps: usize,
    #[serde(default)]
    pub asi: bool,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_cadence: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram_cadence: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKindConfig {
    Identity,
    Dirichlet,
    Mixed,
    Neumann,
}

/// One-dimensional boundary data; `exponents` takes one value for `mixed`
/// and two for `dirichlet`/`neumann` (defaults per kind when omitted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub kind: BoundaryKindConfig,
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
    /// Boundary data `(a0, b0)`: values for dirichlet, value/slope for
    /// mixed, slopes for neumann.
    #[serde(default = "default_data")]
    pub data: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeKindConfig {
    Parabolic,
    Hyperbolic,
}

/// Lift a spatial problem to one extra (scaled-time) coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub kind: TimeKindConfig,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Monte Carlo draws for kernel estimates.
    #[serde(default = "default_kernel_mc")]
    pub kernel_mc: usize,
    /// Monte Carlo points for population-risk estimates.
    #[serde(default = "default_population_mc")]
    pub population_mc: usize,
    /// Confidence level for the bound reports.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Declared representation norm for the a priori bound, when the
    /// right-hand side is not given as an atomic mixture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barron_norm: Option<f64>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            kernel_mc: default_kernel_mc(),
            population_mc: default_population_mc(),
            delta: default_delta(),
            barron_norm: None,
        }
    }
}

/// Width-scaling experiment parameters for the `approx` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxConfig {
    pub widths: Vec<usize>,
    pub seeds_per_width: usize,
    pub num_mc: usize,
}

/// Width sweep for the `spectrum` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub widths: Vec<usize>,
    #[serde(default = "default_spectrum_seeds")]
    pub seeds: usize,
    pub num_mc: usize,
}

fn default_bound() -> f64 {
    1.0
}
fn default_rhs_bound() -> f64 {
    1.0
}
fn default_interval() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_data() -> [f64; 2] {
    [0.0, 0.0]
}
fn default_kernel_mc() -> usize {
    100_000
}
fn default_population_mc() -> usize {
    10_000
}
fn default_delta() -> f64 {
    0.1
}
fn default_spectrum_seeds() -> usize {
    5
}

fn parse_expr(field: &str, src: &str) -> Result<Expr> {
    Expr::parse(src).map_err(|e| anyhow::anyhow!("in {field} ({src:?}): {e}"))
}

impl ExperimentConfig {
    /// Read, parse, and validate; returns the raw text for hashing.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: Self = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        config.validate().with_context(|| format!("invalid config {}", path.display()))?;
        Ok((config, text))
    }

    /// Shape and expression checks; everything downstream may assume them.
    pub fn validate(&self) -> Result<()> {
        if self.problem.rhs.is_some() && self.barron.is_some() {
            bail!("problem.rhs and [barron] are mutually exclusive right-hand sides");
        }
        if self.problem.rhs.is_none() && self.barron.is_none() {
            bail!("the problem needs a right-hand side: set problem.rhs or [barron]");
        }
        if self.samples.n == 0 {
            bail!("samples.n must be at least 1");
        }
        self.build_coeffs()?;
        if let Some(rhs) = &self.problem.rhs {
            let expr = parse_expr("problem.rhs", rhs)?;
            // the right-hand side lives on the spatial coordinates even when
            // a time lift adds one more
            if expr.max_coord() > self.problem.dim {
                bail!(
                    "problem.rhs references x{} but the problem dimension is {}",
                    expr.max_coord(),
                    self.problem.dim
                );
            }
        }
        if let Some(barron) = &self.barron {
            for (i, atom) in barron.atoms.iter().enumerate() {
                if atom.w.len() != self.problem.dim {
                    bail!(
                        "barron.atoms[{i}].w has length {}, problem dimension is {}",
                        atom.w.len(),
                        self.problem.dim
                    );
                }
            }
        }
        if let Some(boundary) = &self.boundary {
            boundary.build()?;
        }
        if let Some(time) = &self.time {
            if !(time.horizon > 0.0 && time.horizon.is_finite()) {
                bail!("time.horizon must be positive and finite");
            }
        }
        Ok(())
    }

    /// Coefficient field over the spatial coordinates (before any lift).
    pub fn build_coeffs(&self) -> Result<CoefficientField> {
        let d = self.problem.dim;
        if d == 0 {
            bail!("problem.dim must be at least 1");
        }
        let a_src: Vec<String> = match &self.problem.a {
            Some(entries) => {
                if entries.len() != d * d {
                    bail!("problem.a needs {} entries (row-major {d}x{d}), got {}", d * d, entries.len());
                }
                entries.clone()
            }
            None => {
                let mut identity = vec!["0".to_string(); d * d];
                for i in 0..d {
                    identity[i * d + i] = "1".to_string();
                }
                identity
            }
        };
        let b_src: Vec<String> = match &self.problem.b {
            Some(entries) => {
                if entries.len() != d {
                    bail!("problem.b needs {d} entries, got {}", entries.len());
                }
                entries.clone()
            }
            None => vec!["0".to_string(); d],
        };
        let c_src = self.problem.c.clone().unwrap_or_else(|| "0".to_string());

        let mut a_exprs = Vec::with_capacity(d * d);
        for (i, src) in a_src.iter().enumerate() {
            a_exprs.push(parse_expr(&format!("problem.a[{i}]"), src)?);
        }
        let mut b_exprs = Vec::with_capacity(d);
        for (i, src) in b_src.iter().enumerate() {
            b_exprs.push(parse_expr(&format!("problem.b[{i}]"), src)?);
        }
        let c_expr = parse_expr("problem.c", &c_src)?;
        CoefficientField::from_exprs(d, self.problem.bound, a_exprs, b_exprs, c_expr)
            .map_err(|e| anyhow::anyhow!("problem coefficients: {e}"))
    }

    /// The atomic representation, when the right-hand side is one.
    pub fn build_representation(&self) -> Result<Option<BarronRepresentation>> {
        let Some(barron) = &self.barron else { return Ok(None) };
        let atoms: Vec<BarronAtom> = barron
            .atoms
            .iter()
            .map(|atom| BarronAtom { a: atom.a, w: atom.w.clone(), p: atom.p })
            .collect();
        let policy = if barron.rescale {
            NormalizationPolicy::Rescale
        } else {
            NormalizationPolicy::Reject
        };
        let rep = BarronRepresentation::new(atoms, self.build_coeffs()?, policy)
            .map_err(|e| anyhow::anyhow!("[barron]: {e}"))?;
        Ok(Some(rep))
    }

    /// Spatial problem (before any time lift), plus the representation when
    /// the right-hand side is one.
    pub fn build_problem(&self) -> Result<(PdeProblem, Option<BarronRepresentation>)> {
        if let Some(rep) = self.build_representation()? {
            return Ok((rep.to_problem(), Some(rep)));
        }
        let coeffs = self.build_coeffs()?;
        let rhs_src = self.problem.rhs.as_ref().expect("validated: rhs present without barron");
        let rhs = parse_expr("problem.rhs", rhs_src)?;
        let problem = PdeProblem::with_rhs_bound(
            coeffs,
            std::sync::Arc::new(move |x: &[f64]| rhs.eval(x)),
            self.problem.rhs_bound,
        );
        Ok((problem, None))
    }

    /// Problem as trained on: the spatial problem, time-lifted if requested.
    pub fn build_lifted_problem(&self) -> Result<(PdeProblem, Option<BarronRepresentation>)> {
        let (problem, rep) = self.build_problem()?;
        match &self.time {
            None => Ok((problem, rep)),
            Some(time) => {
                let kind = match time.kind {
                    TimeKindConfig::Parabolic => TimeKind::Parabolic,
                    TimeKindConfig::Hyperbolic => TimeKind::Hyperbolic,
                };
                let lifted = ntkpde_core::lift_time_dependent(&problem, kind, time.horizon)
                    .map_err(|e| anyhow::anyhow!("[time]: {e}"))?;
                Ok((lifted, rep))
            }
        }
    }

    /// Boundary augmentation, when configured.
    pub fn build_boundary(&self) -> Result<Option<BoundaryAugmentation>> {
        match &self.boundary {
            None => Ok(None),
            Some(boundary) => boundary.build().map(Some),
        }
    }

    /// Training configuration with derived seed and optional cadence
    /// override from the command line.
    pub fn train_config(&self, seed: u64, gram_override: Option<usize>) -> TrainConfig {
        let mut config = TrainConfig::new(self.train.width, self.train.steps, seed);
        config.asi = self.train.asi;
        config.lambda = self.train.lambda;
        config.gamma = self.train.gamma;
        config.learning_rate = self.train.learning_rate;
        config.trace_cadence = self.train.trace_cadence;
        config.gram_cadence = gram_override.or(self.train.gram_cadence);
        config
    }
}

impl BoundaryConfig {
    fn build(&self) -> Result<BoundaryAugmentation> {
        let [a, b] = self.interval;
        let [a0, b0] = self.data;
        let expected = match self.kind {
            BoundaryKindConfig::Identity => 0,
            BoundaryKindConfig::Mixed => 1,
            BoundaryKindConfig::Dirichlet | BoundaryKindConfig::Neumann => 2,
        };
        if let Some(exps) = &self.exponents {
            if exps.len() != expected {
                bail!(
                    "boundary.exponents needs {expected} value(s) for kind {:?}, got {}",
                    self.kind,
                    exps.len()
                );
            }
        }
        let exp = |i: usize, default: f64| {
            self.exponents.as_ref().and_then(|e| e.get(i).copied()).unwrap_or(default)
        };
        let aug = match self.kind {
            BoundaryKindConfig::Identity => Ok(BoundaryAugmentation::identity()),
            BoundaryKindConfig::Dirichlet => {
                BoundaryAugmentation::dirichlet(a, b, a0, b0, exp(0, 1.0), exp(1, 1.0))
            }
            BoundaryKindConfig::Mixed => BoundaryAugmentation::mixed(a, b, a0, b0, exp(0, 2.0)),
            BoundaryKindConfig::Neumann => {
                BoundaryAugmentation::neumann(a, b, a0, b0, exp(0, 2.0), exp(1, 2.0))
            }
        };
        aug.map_err(|e| anyhow::anyhow!("[boundary]: {e}"))
    }
}
