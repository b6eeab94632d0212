//! `uwp`: command-line front end for the artificial urban wage premium toolkit.
//!
//! Every command that writes files also writes `<output>.manifest.json` with
//! the configuration, seed, versions and SHA-256 digests of inputs and
//! outputs. Exit codes: 0 success, 2 input or validation error, 3 numeric
//! non-convergence, 4 resource guard.

mod analytic;
mod data;
mod output;
mod reproduce;
mod simulation;
mod svg;
mod table;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use output::{Run, OUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "uwp", version, about = "Artificial urban wage premium: predictions, simulation, permutation tests and fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for relative output paths.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = ".")]
    out_dir: PathBuf,

    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Predicted cross-sectional elasticity, or a sweep of it.
    PredictBeta(analytic::PredictBetaArgs),
    /// Share of the largest lognormal draw in a group's total.
    ShareOfMax(analytic::ShareOfMaxArgs),
    /// One ensemble of cities under the null model.
    Simulate(simulation::SimulateArgs),
    /// Replicated ensembles over a sigma grid with 95% envelopes.
    SweepSigma(simulation::SweepSigmaArgs),
    /// Log-log OLS of one CSV column on another.
    Regress(data::RegressArgs),
    /// Worker-relocation permutation test over subsample fractions.
    RandomizeTest(data::RandomizeArgs),
    /// Maximum-likelihood fits and model ranking, or fit diagnostics.
    Fit(data::FitArgs),
    /// Clean raw contribution records into a worker table.
    Ingest(data::IngestArgs),
    /// Write synthetic raw contribution records.
    SynthPila(data::SynthArgs),
    /// Regenerate the data behind one figure or table.
    Reproduce(reproduce::ReproduceArgs),
}

/// Shared settings handed to every command.
pub struct Ctx {
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Ctx {
    pub fn run(&self) -> Run {
        Run::new(self.out_dir.clone())
    }
}

/// An optimizer or estimator gave up.
#[derive(Debug)]
pub struct NumericFailure(pub String);

impl fmt::Display for NumericFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "numeric failure: {}", self.0)
    }
}

impl std::error::Error for NumericFailure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<NumericFailure>().is_some() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<uwp_core::Error>() {
            return match e {
                uwp_core::Error::NonConvergence { .. } => 3,
                uwp_core::Error::ResourceGuard { .. } => 4,
                _ => 2,
            };
        }
    }
    2
}

fn dispatch(cli: &Cli) -> Result<()> {
    let ctx = Ctx { out_dir: cli.out_dir.clone(), seed: cli.seed };
    match &cli.command {
        Command::PredictBeta(a) => analytic::predict_beta(a, &ctx),
        Command::ShareOfMax(a) => analytic::share_of_max(a, &ctx),
        Command::Simulate(a) => simulation::simulate(a, &ctx),
        Command::SweepSigma(a) => simulation::sweep_sigma(a, &ctx),
        Command::Regress(a) => data::regress(a, &ctx),
        Command::RandomizeTest(a) => data::randomize_test(a, &ctx),
        Command::Fit(a) => data::fit_cmd(a, &ctx),
        Command::Ingest(a) => data::ingest_cmd(a, &ctx),
        Command::SynthPila(a) => data::synth_cmd(a, &ctx),
        Command::Reproduce(a) => reproduce::reproduce(a, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
