//! Subcommand implementations: build the experiment from a validated
//! config, run it, and write the artifact files.
//!
//! Every run writes `manifest.txt` (config hash, seed, versions) plus the
//! files its subcommand owns:
//!
//! - `converge`: `trace.csv`, `gram_drift.csv`, `bound_report.{txt,csv}`
//! - `approx`: `approx_scaling.csv`, `slope_report.txt`
//! - `generalize`: `trace.csv`, `bound_report.{txt,csv}`
//! - `spectrum`: `spectrum_widths.csv`, `kernel_estimate.csv`,
//!   `spectrum_report.txt`
//!
//! All randomness is derived from the single run seed with fixed purpose
//! tags, and the core reductions are order-deterministic, so re-running a
//! manifest reproduces every byte regardless of `--threads`.

use crate::config::ExperimentConfig;
use anyhow::{bail, Context, Result};
use ntkpde_core::bounds::{self, BoundReport};
use ntkpde_core::{
    approximation_experiment, gram_a, kernel_a_mc, lambda_hat_s, lambda_min, path_norm,
    population_risk_mc, reports_to_csv, reports_to_text, seeds, train, transform_operator,
    AugmentationKind, CoefficientField, PdeProblem, SampleSet, TrainConfig, TrainResult,
    TrainingTrace, C_D_EXACT_1D,
};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

// purpose tags for deriving per-use seeds from the run seed
const SEED_SAMPLES: u64 = 1;
const SEED_TRAIN: u64 = 2;
const SEED_KERNEL: u64 = 3;
const SEED_POPULATION: u64 = 4;
const SEED_APPROX: u64 = 5;
const SEED_SPECTRUM: u64 = 6;
const SEED_MOMENT: u64 = 7;

/// Everything a subcommand needs beyond the parsed config.
pub struct RunContext {
    pub config: ExperimentConfig,
    pub config_text: String,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub gram_cadence: Option<usize>,
    pub command: &'static str,
}

impl RunContext {
    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
    }

    fn write_manifest(&self) -> Result<()> {
        let digest = Sha256::digest(self.config_text.as_bytes());
        let hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let threads =
            self.threads.map_or_else(|| "default".to_string(), |t| t.to_string());
        let manifest = format!(
            "command = {}\nconfig_sha256 = {hash}\nseed = {}\nthreads = {threads}\n\
             ntkpde_cli_version = {}\nntkpde_core_version = {}\n",
            self.command,
            self.seed,
            env!("CARGO_PKG_VERSION"),
            ntkpde_core::VERSION,
        );
        self.write("manifest.txt", &manifest)
    }
}

/// Samples and coefficient field exactly as training sees them (boundary
/// transform applied, samples clamped to its domain).
struct TrainedView {
    samples: SampleSet,
    coeffs: CoefficientField,
}

fn build_view(ctx: &RunContext) -> Result<TrainedView> {
    let (problem, _) = ctx.config.build_lifted_problem()?;
    let samples = SampleSet::uniform(
        ctx.config.samples.n,
        problem.dim(),
        seeds::derive(ctx.seed, SEED_SAMPLES),
    )?;
    match ctx.config.build_boundary()? {
        None => Ok(TrainedView { coeffs: problem.coeffs().clone(), samples }),
        Some(aug) => {
            let transformed = transform_operator(&problem, &aug)?;
            let samples = transformed.clamp_samples(&samples);
            let coeffs = transformed.problem().coeffs().clone();
            Ok(TrainedView { samples, coeffs })
        }
    }
}

fn train_with_config(ctx: &RunContext) -> Result<(TrainResult, TrainConfig, PdeProblem)> {
    let (problem, _) = ctx.config.build_lifted_problem()?;
    let aug = ctx.config.build_boundary()?;
    let samples = SampleSet::uniform(
        ctx.config.samples.n,
        problem.dim(),
        seeds::derive(ctx.seed, SEED_SAMPLES),
    )?;
    let mut tc = ctx.config.train_config(seeds::derive(ctx.seed, SEED_TRAIN), ctx.gram_cadence);
    if tc.gram_cadence.is_none() {
        tc.gram_cadence = Some((tc.steps / 100).max(1));
    }
    let result = train(&problem, &samples, &tc, aug.as_ref())?;
    Ok((result, tc, problem))
}

/// Columns `step,t,lambda_min,gram_drift,in_set` for the recorded Gram
/// snapshots; the stopping set is `drift <= lambda_hat / 4` (closed) with
/// `lambda_hat` half the smallest eigenvalue at step 0, floored at zero.
fn gram_drift_csv(trace: &TrainingTrace) -> String {
    let lambda_hat = trace
        .records
        .iter()
        .find_map(|r| r.lambda_min)
        .map_or(0.0, |l| (l / 2.0).max(0.0));
    let mut out = String::from("step,t,lambda_min,gram_drift,in_set\n");
    for r in &trace.records {
        if let (Some(lmin), Some(drift)) = (r.lambda_min, r.gram_drift) {
            let in_set = drift <= lambda_hat / 4.0;
            let _ = writeln!(out, "{},{:.16e},{lmin:.16e},{drift:.16e},{in_set}", r.step, r.t);
        }
    }
    out
}

pub fn run_convergence(ctx: &RunContext) -> Result<()> {
    let (result, tc, problem) = train_with_config(ctx)?;
    ctx.write("trace.csv", &result.trace.to_csv())?;
    ctx.write("gram_drift.csv", &gram_drift_csv(&result.trace))?;

    let view = build_view(ctx)?;
    let reports = convergence_reports(ctx, &view, &tc, &result, &problem)?;
    ctx.write("bound_report.csv", &reports_to_csv(&reports))?;
    ctx.write("bound_report.txt", &reports_to_text(&reports))?;
    ctx.write_manifest()?;
    Ok(())
}

fn convergence_reports(
    ctx: &RunContext,
    view: &TrainedView,
    tc: &TrainConfig,
    result: &TrainResult,
    problem: &PdeProblem,
) -> Result<Vec<BoundReport>> {
    let n = view.samples.len();
    let d = problem.dim();
    let m = result.theta.width();
    let cap_m = view.coeffs.bound();
    let delta = ctx.config.diagnostics.delta;
    let r0 = result.initial_risk;
    let mut reports = Vec::new();

    // measured risk decay against the rate exp(-m lambda_hat t / n), with
    // lambda_hat half the smallest Gram eigenvalue at initialization
    let lambda_hat = result
        .trace
        .records
        .iter()
        .find_map(|r| r.lambda_min)
        .map_or(0.0, |l| (l / 2.0).max(0.0));
    if let Some(last) = result.trace.final_record() {
        let bound = (-(m as f64) * lambda_hat * last.t / n as f64).exp() * r0;
        reports.push(
            BoundReport::new(
                "linear_rate",
                vec![
                    ("m".into(), m as f64),
                    ("n".into(), n as f64),
                    ("lambda_hat".into(), lambda_hat),
                    ("t".into(), last.t),
                    ("initial_risk".into(), r0),
                ],
                bound,
            )
            .with_measured(last.risk),
        );
    }

    // initialization risk: the paired start evaluates to the zero function,
    // so its bound is the gamma = 0 case
    let draw_width = if tc.asi { tc.width / 2 } else { tc.width };
    let gamma = if tc.asi {
        0.0
    } else {
        tc.gamma.unwrap_or_else(|| ntkpde_core::default_gamma(draw_width))
    };
    reports.push(
        BoundReport::new(
            "initial_risk",
            vec![
                ("gamma".into(), gamma),
                ("m".into(), m as f64),
                ("M".into(), cap_m),
                ("d".into(), d as f64),
                ("delta".into(), delta),
            ],
            bounds::initial_risk_bound(gamma, m, cap_m, d, delta)?,
        )
        .with_measured(r0),
    );

    // kernel eigenvalue on the training samples, then the width requirement
    // and the drift radius that divide by it
    let lh = lambda_hat_s(
        &view.samples,
        &view.coeffs,
        ctx.config.diagnostics.kernel_mc,
        seeds::derive(ctx.seed, SEED_KERNEL),
    )?;
    let lambda_s = if lh.positive { lh.value } else { 0.0 };
    if lh.positive {
        let c_d = if d == 1 {
            C_D_EXACT_1D
        } else {
            ntkpde_core::c_d_mc(
                d,
                ctx.config.diagnostics.kernel_mc,
                seeds::derive(ctx.seed, SEED_MOMENT),
            )?
            .0
        };
        reports.push(BoundReport::new(
            "required_width",
            vec![
                ("n".into(), n as f64),
                ("M".into(), cap_m),
                ("d".into(), d as f64),
                ("delta".into(), delta),
                ("lambda_s".into(), lambda_s),
                ("initial_risk".into(), r0),
                ("c_d".into(), c_d),
            ],
            bounds::required_width(n, cap_m, d, delta, lambda_s, r0, c_d)?,
        ));
    } else {
        log::warn!(
            "kernel eigenvalue estimate {:e} (se {:e}) is not positive beyond noise; \
             skipping the width requirement",
            lh.value,
            lh.std_error
        );
    }

    let max_dw = result
        .trace
        .records
        .iter()
        .map(|r| r.max_dw)
        .fold(0.0f64, f64::max);
    reports.push(
        BoundReport::new(
            "drift_radius",
            vec![
                ("M".into(), cap_m),
                ("d".into(), d as f64),
                ("m".into(), m as f64),
                ("n".into(), n as f64),
                ("delta".into(), delta),
                ("lambda_s".into(), lambda_s),
                ("initial_risk".into(), r0),
            ],
            bounds::drift_bound_q(cap_m, d, m, n, delta, lambda_s, r0)?,
        )
        .with_measured(max_dw),
    );

    Ok(reports)
}

pub fn run_approximation(ctx: &RunContext) -> Result<()> {
    let Some(approx) = ctx.config.approx.clone() else {
        bail!("the approx subcommand needs an [approx] section");
    };
    let Some(rep) = ctx.config.build_representation()? else {
        bail!("the approx subcommand needs the right-hand side as a [barron] representation");
    };
    let table = approximation_experiment(
        &rep,
        &approx.widths,
        approx.seeds_per_width,
        approx.num_mc,
        seeds::derive(ctx.seed, SEED_APPROX),
    )?;
    ctx.write("approx_scaling.csv", &table.to_csv())?;

    let mut report = String::new();
    let _ = writeln!(report, "representation_norm = {:.10e}", rep.barron_norm());
    match table.slope {
        Some(slope) => {
            let _ = writeln!(report, "fitted_log_log_slope = {slope:.6}");
            let _ = writeln!(report, "reference_rate = -1");
        }
        None => {
            let _ = writeln!(report, "fitted_log_log_slope = none (fewer than two positive means)");
        }
    }
    for row in &table.rows {
        let within = row.mean_risk <= row.bound + 3.0 * row.std_err;
        let _ = writeln!(
            report,
            "width {}: mean_risk = {:.6e}, std_err = {:.6e}, bound = {:.6e}, within_3se = {within}",
            row.width, row.mean_risk, row.std_err, row.bound
        );
    }
    ctx.write("slope_report.txt", &report)?;
    ctx.write_manifest()?;
    Ok(())
}

pub fn run_generalization(ctx: &RunContext) -> Result<()> {
    if let Some(aug) = ctx.config.build_boundary()? {
        if aug.kind() != AugmentationKind::Identity {
            bail!(
                "generalization bounds are stated for interior sampling on the unit cube; \
                 remove the [boundary] section"
            );
        }
    }
    let (result, tc, problem) = train_with_config(ctx)?;
    ctx.write("trace.csv", &result.trace.to_csv())?;

    let r_s = result.final_risk;
    let (r_d, r_d_se) = population_risk_mc(
        &result.theta,
        &problem,
        ctx.config.diagnostics.population_mc,
        seeds::derive(ctx.seed, SEED_POPULATION),
    )?;
    let p_norm = path_norm(&result.theta);
    let n = ctx.config.samples.n;
    let d = problem.dim();
    let m = result.theta.width();
    let cap_m = problem.coeffs().bound();
    let delta = ctx.config.diagnostics.delta;

    let mut reports = vec![BoundReport::new(
        "posterior_gap",
        vec![
            ("path_norm".into(), p_norm),
            ("M".into(), cap_m),
            ("d".into(), d as f64),
            ("n".into(), n as f64),
            ("delta".into(), delta),
            ("empirical_risk".into(), r_s),
            ("population_risk_mc".into(), r_d),
            ("population_risk_se".into(), r_d_se),
        ],
        bounds::posterior_gap_bound(p_norm, cap_m, d, n, delta, bounds::DeltaReading::Reciprocal)?,
    )
    .with_measured((r_d - r_s).abs())];

    let declared_norm = match ctx.config.build_representation()? {
        Some(rep) => Some(rep.barron_norm()),
        None => ctx.config.diagnostics.barron_norm,
    };
    match declared_norm {
        Some(bnorm) => reports.push(
            BoundReport::new(
                "prior_risk",
                vec![
                    ("barron_norm".into(), bnorm),
                    ("m".into(), m as f64),
                    ("n".into(), n as f64),
                    ("M".into(), cap_m),
                    ("d".into(), d as f64),
                    ("lambda".into(), tc.lambda),
                    ("delta".into(), delta),
                ],
                bounds::prior_bound(bnorm, m, n, cap_m, d, tc.lambda, delta)?,
            )
            .with_measured(r_d),
        ),
        None => log::info!(
            "no representation norm declared ([barron] or diagnostics.barron_norm); \
             skipping the a priori bound"
        ),
    }

    ctx.write("bound_report.csv", &reports_to_csv(&reports))?;
    ctx.write("bound_report.txt", &reports_to_text(&reports))?;
    ctx.write_manifest()?;
    Ok(())
}

pub fn run_ntk_spectrum(ctx: &RunContext) -> Result<()> {
    let Some(spectrum) = ctx.config.spectrum.clone() else {
        bail!("the spectrum subcommand needs a [spectrum] section");
    };
    if spectrum.widths.is_empty() || spectrum.seeds == 0 {
        bail!("[spectrum] needs at least one width and one seed");
    }
    let view = build_view(ctx)?;
    let d = view.coeffs.dim();

    let (kernel, kernel_se) = kernel_a_mc(
        &view.samples,
        &view.coeffs,
        spectrum.num_mc,
        seeds::derive(ctx.seed, SEED_KERNEL),
    )?;
    let mut kernel_csv = String::from("i,j,value,std_error\n");
    for i in 0..kernel.n() {
        for j in 0..kernel.n() {
            let _ = writeln!(
                kernel_csv,
                "{i},{j},{:.16e},{:.16e}",
                kernel[(i, j)],
                kernel_se[(i, j)]
            );
        }
    }
    ctx.write("kernel_estimate.csv", &kernel_csv)?;

    let mut widths_csv =
        String::from("width,mean_lambda_min,se_lambda_min,mean_kernel_gap,se_kernel_gap\n");
    let spectrum_base = seeds::derive(ctx.seed, SEED_SPECTRUM);
    for (wi, &width) in spectrum.widths.iter().enumerate() {
        let mut lambda_mins = Vec::with_capacity(spectrum.seeds);
        let mut gaps = Vec::with_capacity(spectrum.seeds);
        for j in 0..spectrum.seeds {
            let init_seed = seeds::derive(spectrum_base, (wi * spectrum.seeds + j) as u64);
            let theta = ntkpde_core::init_params(
                width,
                d,
                ntkpde_core::default_gamma(width),
                init_seed,
            )?;
            let gram = gram_a(&theta, &view.samples, &view.coeffs)?;
            lambda_mins.push(lambda_min(&gram)?);
            gaps.push(gram.frobenius_distance(&kernel));
        }
        let (ml, sl) = mean_se(&lambda_mins);
        let (mg, sg) = mean_se(&gaps);
        let _ = writeln!(widths_csv, "{width},{ml:.16e},{sl:.16e},{mg:.16e},{sg:.16e}");
    }
    ctx.write("spectrum_widths.csv", &widths_csv)?;

    let lh = lambda_hat_s(
        &view.samples,
        &view.coeffs,
        spectrum.num_mc,
        seeds::derive(ctx.seed, SEED_KERNEL),
    )?;
    let report = format!(
        "kernel_lambda_min = {:.10e}\nstd_error = {:.10e}\npositive_beyond_noise = {}\n",
        lh.value, lh.std_error, lh.positive
    );
    ctx.write("spectrum_report.txt", &report)?;
    ctx.write_manifest()?;
    Ok(())
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
