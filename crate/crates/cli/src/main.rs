//! `ntkpde`: run shallow-network PDE experiments from a TOML config.
//!
//! Exit codes: 0 on success, 1 for configuration or usage errors, 2 when a
//! numerical guard trips (divergence, non-finite values, a failed
//! backtracking search, or an eigensolver that does not settle).

mod config;
mod run;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ntkpde_core::CoreError;
use run::RunContext;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "ntkpde", version, about = "Shallow-network PDE experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a sampled problem and report measured decay against bounds.
    Converge(RunArgs),
    /// Sample networks from a declared mixture and record risk vs width.
    Approx(RunArgs),
    /// Train with the path-norm penalty and compare both risk gaps to bounds.
    Generalize(RunArgs),
    /// Compare finite-width Gram matrices against the infinite-width kernel.
    Spectrum(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `out`, else `runs/<command>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Cap the worker-thread count (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// Override how often Gram diagnostics are recorded (in steps).
    #[arg(long)]
    gram_cadence: Option<usize>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NTKPDE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.exit_code() == 0 { 0 } else { 1 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let code = match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            classify(&err)
        }
    };
    std::process::exit(code);
}

/// Numerical guards exit 2; everything else is a configuration error.
fn classify(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            match core {
                CoreError::Diverged { .. }
                | CoreError::NonFinite { .. }
                | CoreError::BacktrackFailed { .. }
                | CoreError::EigenNoConvergence { .. } => return 2,
                _ => {}
            }
        }
    }
    1
}

fn dispatch(cli: Cli) -> Result<()> {
    let (name, args): (&'static str, &RunArgs) = match &cli.command {
        Command::Converge(a) => ("converge", a),
        Command::Approx(a) => ("approx", a),
        Command::Generalize(a) => ("generalize", a),
        Command::Spectrum(a) => ("spectrum", a),
    };

    let (config, config_text) = config::ExperimentConfig::load(&args.config)?;
    config.validate()?;

    if let Some(threads) = args.threads {
        if threads == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure the worker pool")?;
    }

    let out_dir = args
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(name));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;

    let ctx = RunContext {
        seed: args.seed.unwrap_or(config.seed),
        gram_cadence: args.gram_cadence,
        threads: args.threads,
        config,
        config_text,
        out_dir,
        command: name,
    };

    match name {
        "converge" => run::run_convergence(&ctx),
        "approx" => run::run_approximation(&ctx),
        "generalize" => run::run_generalization(&ctx),
        _ => run::run_ntk_spectrum(&ctx),
    }
}
