//! `simulate` and `sweep-sigma`.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;
use uwp_core::distributions::{Lognormal, Pareto};
use uwp_core::elasticity;
use uwp_core::simulate::{self, Band, CityEnsemble, EnsembleSpec, SweepTable};

use crate::analytic::linear_grid;
use crate::output::sibling;
use crate::svg::{self, Chart, Mark, Series};
use crate::Ctx;

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnsembleArgs {
    /// Number of cities.
    #[arg(long, default_value_t = 900)]
    pub cities: usize,
    #[arg(long, default_value_t = 10_000.0)]
    pub n_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Hold the productivity log scale at this value instead of fixing the mean at 1.
    #[arg(long, allow_negative_numbers = true)]
    pub log_scale: Option<f64>,
    /// Build productivities as products of this many log-uniform traits.
    #[arg(long)]
    pub traits: Option<usize>,
    /// Refuse ensembles with more workers than this.
    #[arg(long, default_value_t = 1_000_000_000)]
    pub worker_cap: u64,
}

impl EnsembleArgs {
    pub fn spec(&self, sigma: f64, seed: u64) -> Result<EnsembleSpec> {
        let sizes = Pareto::new(self.n_min, self.alpha)?;
        let productivity = match self.log_scale {
            Some(ls) => Lognormal::new(ls, sigma)?,
            None => Lognormal::unit_mean(sigma)?,
        };
        let mut spec = EnsembleSpec::new(self.cities, sizes, productivity, seed)?;
        spec.unit_mean = self.log_scale.is_none();
        spec.trait_count = self.traits;
        spec.worker_cap = self.worker_cap;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CityRow {
    pub city_id: usize,
    pub size: u64,
    pub total_output: f64,
    pub percap_output: f64,
}

pub fn city_rows(ens: &CityEnsemble) -> Vec<CityRow> {
    ens.cities
        .iter()
        .map(|c| CityRow { city_id: c.city_id, size: c.size, total_output: c.total_output, percap_output: c.per_capita_output() })
        .collect()
}

pub fn ensemble_chart(title: &str, rows: &[CityRow]) -> Chart {
    let pts = rows.iter().map(|r| (r.size as f64, r.percap_output)).collect();
    Chart::new(title, "city size n", "output per worker").log_x().log_y().with(Series::new("cities", pts, Mark::Dots))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

pub fn simulate(args: &SimulateArgs, ctx: &Ctx) -> Result<()> {
    let mut spec = args.ensemble.spec(args.sigma, ctx.seed)?;
    spec.replicate = args.replicate;
    let ens = simulate::generate_ensemble(&spec)?;
    let rows = city_rows(&ens);
    let sl = elasticity::is_superlinear(&ens.sizes(), &ens.totals())?;
    println!("cities={} workers={} beta_hat={:.4} se={:.4}", rows.len(), ens.total_workers(), sl.exponent, sl.std_error);
    let mut run = ctx.run();
    run.write_csv(&args.out, &rows)?;
    if let Some(path) = &args.svg {
        run.write_text(path, &svg::render(&[ensemble_chart(&format!("sigma = {}", args.sigma), &rows)]))?;
    }
    run.finish("simulate", ctx.seed, args, &args.out)?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepSigmaArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 1.5)]
    pub from: f64,
    #[arg(long, default_value_t = 6.5)]
    pub to: f64,
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,
    /// Ensembles per sigma.
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeRow {
    pub sigma: f64,
    pub succeeded: usize,
    pub failed: usize,
    pub beta_lo: Option<f64>,
    pub beta_median: Option<f64>,
    pub beta_hi: Option<f64>,
    pub intercept_lo: Option<f64>,
    pub intercept_median: Option<f64>,
    pub intercept_hi: Option<f64>,
    pub r2_lo: Option<f64>,
    pub r2_median: Option<f64>,
    pub r2_hi: Option<f64>,
    pub beta_ave: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRow {
    pub sigma: f64,
    pub replicate: u64,
    pub beta_hat: Option<f64>,
    pub intercept_hat: Option<f64>,
    pub r2: Option<f64>,
    pub error: String,
}

pub fn envelope_rows(table: &SweepTable, n_min: f64, alpha: f64) -> Vec<EnvelopeRow> {
    let split = |b: Option<Band>| (b.map(|b| b.lower), b.map(|b| b.median), b.map(|b| b.upper));
    table
        .envelopes
        .iter()
        .map(|e| {
            let (beta_lo, beta_median, beta_hi) = split(e.beta);
            let (intercept_lo, intercept_median, intercept_hi) = split(e.intercept);
            let (r2_lo, r2_median, r2_hi) = split(e.r2);
            EnvelopeRow {
                sigma: e.sigma,
                succeeded: e.succeeded,
                failed: e.failed,
                beta_lo,
                beta_median,
                beta_hi,
                intercept_lo,
                intercept_median,
                intercept_hi,
                r2_lo,
                r2_median,
                r2_hi,
                beta_ave: elasticity::beta_ave(n_min, e.sigma, alpha, 1.0).ok().map(|p| p.beta),
            }
        })
        .collect()
}

pub fn cell_rows(table: &SweepTable) -> Vec<CellRow> {
    table
        .cells
        .iter()
        .map(|c| match &c.outcome {
            Ok(e) => CellRow {
                sigma: c.sigma,
                replicate: c.replicate,
                beta_hat: Some(e.beta_hat),
                intercept_hat: Some(e.intercept_hat),
                r2: Some(e.r2),
                error: String::new(),
            },
            Err(msg) => CellRow {
                sigma: c.sigma,
                replicate: c.replicate,
                beta_hat: None,
                intercept_hat: None,
                r2: None,
                error: msg.clone(),
            },
        })
        .collect()
}

pub fn sweep_charts(rows: &[EnvelopeRow]) -> Vec<Chart> {
    type Pick = fn(&EnvelopeRow) -> (Option<f64>, Option<f64>, Option<f64>);
    let panels: [(&str, Pick); 3] = [
        ("elasticity", |r| (r.beta_lo, r.beta_median, r.beta_hi)),
        ("intercept", |r| (r.intercept_lo, r.intercept_median, r.intercept_hi)),
        ("R squared", |r| (r.r2_lo, r.r2_median, r.r2_hi)),
    ];
    panels
        .iter()
        .map(|(name, pick)| {
            let mut band = Vec::new();
            let mut upper = Vec::new();
            let mut median = Vec::new();
            for r in rows {
                if let (Some(lo), Some(mid), Some(hi)) = pick(r) {
                    band.push((r.sigma, lo));
                    upper.push(hi);
                    median.push((r.sigma, mid));
                }
            }
            let mut chart = Chart::new(name, "sigma", name)
                .with(Series::new("95% envelope", band, Mark::Band(upper)))
                .with(Series::new("median", median, Mark::Line));
            if *name == "elasticity" {
                let theory = rows.iter().filter_map(|r| Some((r.sigma, r.beta_ave?))).collect();
                chart.series.push(Series::new("beta_ave", theory, Mark::Dashed));
            }
            chart
        })
        .collect()
}

/// Run the sweep; trips the resource guard up front on the first cell.
pub fn run_sweep(ensemble: &EnsembleArgs, sigmas: &[f64], reps: usize, seed: u64) -> Result<SweepTable> {
    let Some(&first) = sigmas.first() else { bail!("empty sigma grid") };
    let base = ensemble.spec(first, seed)?;
    simulate::draw_sizes(&base)?;
    let table = simulate::sigma_sweep(&base, sigmas, reps)?;
    if table.envelopes.iter().all(|e| e.succeeded == 0) {
        let msg = table.cells.iter().find_map(|c| c.outcome.as_ref().err()).cloned().unwrap_or_default();
        bail!("every sweep cell failed: {msg}");
    }
    Ok(table)
}

pub fn sweep_sigma(args: &SweepSigmaArgs, ctx: &Ctx) -> Result<()> {
    let sigmas = linear_grid(args.from, args.to, args.step)?;
    let table = run_sweep(&args.ensemble, &sigmas, args.reps, ctx.seed)?;
    let rows = envelope_rows(&table, args.ensemble.n_min, args.ensemble.alpha);
    let mut run = ctx.run();
    run.write_csv(&args.out, &rows)?;
    run.write_csv(&sibling(&args.out, "cells", "csv"), cell_rows(&table))?;
    if let Some(path) = &args.svg {
        run.write_text(path, &svg::render(&sweep_charts(&rows)))?;
    }
    run.finish("sweep-sigma", ctx.seed, args, &args.out)?;
    Ok(())
}
