//! End-to-end pipelines behind `reproduce <target>`.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use uwp_core::elasticity::{self, SweepAxis};
use uwp_core::fit::{self, FitOptions, ModelRow};
use uwp_core::ingest::{self, CleaningConfig, SynthSpec};
use uwp_core::randomize::{self, ProtocolConfig, WorkerTable};
use uwp_core::regress::{compare_coefficients, OlsFit};
use uwp_core::rng::Stream;
use uwp_core::simulate;

use crate::analytic::{self, linear_grid, log_grid, BetaRow};
use crate::data::{self, Prepared};
use crate::output::{sibling, Run};
use crate::simulation::{self, EnsembleArgs};
use crate::svg::{self, Chart, Mark, Series};
use crate::table::{self, Column};
use crate::Ctx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Target {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Table1,
    #[value(name = "tableC2")]
    #[serde(rename = "tableC2")]
    TableC2,
    #[value(name = "tableC3")]
    #[serde(rename = "tableC3")]
    TableC3,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Fig1 => "fig1",
            Target::Fig2 => "fig2",
            Target::Fig3 => "fig3",
            Target::Fig4 => "fig4",
            Target::Fig5 => "fig5",
            Target::Fig6 => "fig6",
            Target::Fig7 => "fig7",
            Target::Table1 => "table1",
            Target::TableC2 => "tableC2",
            Target::TableC3 => "tableC3",
        }
    }

    fn needs_workers(self) -> bool {
        matches!(self, Target::Fig6 | Target::Fig7 | Target::Table1 | Target::TableC2 | Target::TableC3)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub target: Target,
    /// Ensembles per sigma (fig5).
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Relocations per subsample (fig6, table1).
    #[arg(long, default_value_t = 1000)]
    pub permutations: usize,
    /// Subsamples per fraction (fig6).
    #[arg(long, default_value_t = 10)]
    pub subsamples: usize,
    /// Clean worker table for the data targets.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Generate the calibrated synthetic worker table in memory instead.
    #[arg(long, conflicts_with = "input")]
    pub synth: bool,
    /// Municipalities below this size are dropped (fig6, table1).
    #[arg(long, default_value_t = 287)]
    pub min_size: u64,
    /// Bootstrap resamples for the model tables.
    #[arg(long, default_value_t = 99)]
    pub bootstrap: usize,
    /// Wage values fitted in tableC3, drawn deterministically.
    #[arg(long, default_value_t = 200_000)]
    pub max_values: usize,
    /// Also render an SVG next to the CSV.
    #[arg(long)]
    pub svg: bool,
}

pub fn synth_hint() -> String {
    "uwp synth-pila --municipalities 1117 --alpha 0.67 --n-min 287 --sigma 2.0 --workers 6700000 --seed 7 --out raw.csv \
     && uwp ingest --input raw.csv --out workers.csv"
        .into()
}

fn workers(args: &ReproduceArgs, ctx: &Ctx, run: &mut Run) -> Result<WorkerTable> {
    if let Some(path) = &args.input {
        return data::load_workers(path, run, 1);
    }
    if !args.synth {
        return Err(anyhow!(uwp_core::Error::InvalidParameter {
            name: "input",
            reason: format!(
                "{} needs a worker table; pass --input workers.csv or --synth. To create one: {}",
                args.target.name(),
                synth_hint()
            ),
        }));
    }
    let synth = ingest::synth_pila(SynthSpec::calibrated(ctx.seed)?)?;
    let (table, ledger) = ingest::clean_to_table(synth.rows(), &CleaningConfig::default())?;
    eprintln!("synthetic table: {} workers in {} municipalities", ledger.kept, table.labels.len());
    Ok(table)
}

pub fn reproduce(args: &ReproduceArgs, ctx: &Ctx) -> Result<()> {
    let mut run = ctx.run();
    let name = args.target.name();
    let csv = PathBuf::from(format!("{name}.csv"));
    let table = if args.target.needs_workers() { Some(workers(args, ctx, &mut run)?) } else { None };
    let charts = match args.target {
        Target::Fig1 => fig1(&csv, &mut run)?,
        Target::Fig2 => fig2(&csv, &mut run)?,
        Target::Fig3 => fig3(&csv, &mut run)?,
        Target::Fig4 => fig4(&csv, &mut run, ctx.seed)?,
        Target::Fig5 => fig5(&csv, &mut run, ctx.seed, args.reps)?,
        Target::Fig6 => fig6(&csv, &mut run, ctx.seed, args, table.as_ref().unwrap())?,
        Target::Fig7 => fig7(&csv, &mut run, table.as_ref().unwrap())?,
        Target::Table1 => table1(&csv, &mut run, ctx.seed, args, table.as_ref().unwrap())?,
        Target::TableC2 => table_c2(&csv, &mut run, ctx.seed, args, table.as_ref().unwrap())?,
        Target::TableC3 => table_c3(&csv, &mut run, ctx.seed, args, table.as_ref().unwrap())?,
    };
    if args.svg && !charts.is_empty() {
        run.write_text(Path::new(&format!("{name}.svg")), &svg::render(&charts))?;
    }
    let manifest = run.finish("reproduce", ctx.seed, args, &csv)?;
    eprintln!("wrote {}", manifest.display());
    Ok(())
}

fn fig1(csv: &Path, run: &mut Run) -> Result<Vec<Chart>> {
    let rows = analytic::share_rows(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &analytic::size_grid(1e7, 4))?;
    run.write_csv(csv, &rows)?;
    Ok(vec![analytic::share_chart(&rows)])
}

#[derive(Debug, Clone, Serialize)]
struct BoundaryRow {
    n: f64,
    beta: f64,
    sigma: f64,
}

fn fig2(csv: &Path, run: &mut Run) -> Result<Vec<Chart>> {
    let betas = [1.0, 1.25, 1.5, 2.0];
    let mut rows = Vec::new();
    for &beta in &betas {
        for n in log_grid(1e2, 1e8, 8) {
            rows.push(BoundaryRow { n, beta, sigma: elasticity::iso_sigma(n, beta)? });
        }
    }
    run.write_csv(csv, &rows)?;
    let mut chart = Chart::new("largest draw dominates above the curve", "n", "sigma").log_x();
    for &beta in &betas {
        let pts = rows.iter().filter(|r| r.beta == beta).map(|r| (r.n, r.sigma)).collect();
        let mark = if beta == 1.0 { Mark::Line } else { Mark::Dashed };
        chart.series.push(Series::new(format!("beta = {beta}"), pts, mark));
    }
    Ok(vec![chart])
}

struct PanelRow {
    panel: &'static str,
    row: BetaRow,
}

#[derive(Serialize)]
struct PanelRecord<'a> {
    panel: &'a str,
    n_min: f64,
    sigma: f64,
    alpha: f64,
    fraction: f64,
    beta: Option<f64>,
    regime: &'a str,
}

impl PanelRow {
    fn record(&self) -> PanelRecord<'_> {
        let r = &self.row;
        PanelRecord {
            panel: self.panel,
            n_min: r.n_min,
            sigma: r.sigma,
            alpha: r.alpha,
            fraction: r.fraction,
            beta: r.beta,
            regime: r.regime,
        }
    }
}

fn fig3(csv: &Path, run: &mut Run) -> Result<Vec<Chart>> {
    let mut rows = Vec::new();
    let mut push = |panel, axis, values: &[f64], n_min, sigma, alpha, fraction| {
        for (v, p) in values.iter().zip(elasticity::sweep(axis, values, n_min, sigma, alpha, fraction)) {
            let row = match p {
                Ok(p) => BetaRow::from_prediction(&p),
                Err(_) => {
                    let mut r = BetaRow { n_min, sigma, alpha, fraction, beta: None, regime: "invalid" };
                    match axis {
                        SweepAxis::Sigma => r.sigma = *v,
                        SweepAxis::Fraction => r.fraction = *v,
                        SweepAxis::Alpha => r.alpha = *v,
                    }
                    r
                }
            };
            rows.push(PanelRow { panel, row });
        }
    };
    let sigmas = linear_grid(0.5, 6.5, 0.05)?;
    for n_min in [1e3, 1e4, 1e5] {
        push("sigma", SweepAxis::Sigma, &sigmas, n_min, 0.0, 1.0, 1.0);
    }
    let fractions = log_grid(1e-3, 1.0, 12);
    let alphas = linear_grid(0.5, 1.5, 0.02)?;
    for sigma in [2.0, 4.0, 6.0] {
        push("fraction", SweepAxis::Fraction, &fractions, 1e4, sigma, 1.0, 0.0);
        push("alpha", SweepAxis::Alpha, &alphas, 1e4, sigma, 0.0, 1.0);
    }
    run.write_csv(csv, rows.iter().map(PanelRow::record))?;

    let chart = |panel: &str, x: fn(&BetaRow) -> f64, group: fn(&BetaRow) -> f64, group_name: &str| {
        let mut c = Chart::new(&format!("beta_ave against {panel}"), panel, "beta_ave");
        c.log_x = panel == "fraction";
        let mut keys: Vec<f64> = rows.iter().filter(|r| r.panel == panel).map(|r| group(&r.row)).collect();
        keys.dedup();
        for k in keys {
            let pts = rows
                .iter()
                .filter(|r| r.panel == panel && group(&r.row) == k)
                .filter_map(|r| Some((x(&r.row), r.row.beta?)))
                .collect();
            c.series.push(Series::new(format!("{group_name} = {k}"), pts, Mark::Line));
        }
        c
    };
    Ok(vec![
        chart("sigma", |r| r.sigma, |r| r.n_min, "n_min"),
        chart("fraction", |r| r.fraction, |r| r.sigma, "sigma"),
        chart("alpha", |r| r.alpha, |r| r.sigma, "sigma"),
    ])
}

fn default_ensemble() -> EnsembleArgs {
    EnsembleArgs { cities: 900, n_min: 10_000.0, alpha: 1.0, log_scale: None, traits: None, worker_cap: 1_000_000_000 }
}

#[derive(Debug, Clone, Serialize)]
struct SigmaCityRow {
    sigma: f64,
    city_id: usize,
    size: u64,
    total_output: f64,
    percap_output: f64,
}

fn fig4(csv: &Path, run: &mut Run, seed: u64) -> Result<Vec<Chart>> {
    let ens_args = default_ensemble();
    let mut rows = Vec::new();
    let mut charts = Vec::new();
    for sigma in [2.0, 4.0, 6.0] {
        let mut spec = ens_args.spec(sigma, seed)?;
        spec.seed = simulate::cell_seed(seed, sigma);
        let ens = simulate::generate_ensemble(&spec)?;
        let cities = simulation::city_rows(&ens);
        let sl = elasticity::is_superlinear(&ens.sizes(), &ens.totals())?;
        eprintln!("sigma {sigma}: beta_hat {:.4} (se {:.4})", sl.exponent, sl.std_error);
        charts.push(simulation::ensemble_chart(&format!("sigma = {sigma}, beta_hat = {:.3}", sl.exponent), &cities));
        rows.extend(cities.into_iter().map(|c| SigmaCityRow {
            sigma,
            city_id: c.city_id,
            size: c.size,
            total_output: c.total_output,
            percap_output: c.percap_output,
        }));
    }
    run.write_csv(csv, &rows)?;
    Ok(charts)
}

fn fig5(csv: &Path, run: &mut Run, seed: u64, reps: usize) -> Result<Vec<Chart>> {
    let ens = default_ensemble();
    let sigmas = linear_grid(1.5, 6.5, 0.25)?;
    let table = simulation::run_sweep(&ens, &sigmas, reps, seed)?;
    let rows = simulation::envelope_rows(&table, ens.n_min, ens.alpha);
    run.write_csv(csv, &rows)?;
    run.write_csv(&sibling(csv, "cells", "csv"), simulation::cell_rows(&table))?;
    Ok(simulation::sweep_charts(&rows))
}

fn fig6(csv: &Path, run: &mut Run, seed: u64, args: &ReproduceArgs, table: &WorkerTable) -> Result<Vec<Chart>> {
    let (table, _) = ingest::drop_small_municipalities(table, args.min_size)?;
    let cfg = ProtocolConfig { subsample_repeats: args.subsamples, permutations: args.permutations, seed, ..Default::default() };
    let summary = data::run_randomization(&table, &cfg, csv, run)?;
    Ok(data::randomization_charts(&summary))
}

#[derive(Debug, Clone, Serialize)]
struct CcdfRow {
    size: u64,
    empirical: f64,
    model: Option<f64>,
}

fn fig7(csv: &Path, run: &mut Run, table: &WorkerTable) -> Result<Vec<Chart>> {
    let mut sizes: Vec<u64> = table.municipality_sizes().into_iter().filter(|&s| s > 0).collect();
    sizes.sort_unstable();
    let values: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let tail = fit::estimate_pareto_tail(&values)?;
    eprintln!("tail: n_min = {} alpha = {:.4} n_tail = {}", tail.n_min_hat, tail.alpha_hat, tail.n_tail);
    let n = sizes.len() as f64;
    let share = tail.n_tail as f64 / n;
    let mut rows = Vec::new();
    let mut i = 0;
    while i < sizes.len() {
        let s = sizes[i];
        let model = (s as f64 >= tail.n_min_hat).then(|| share * (s as f64 / tail.n_min_hat).powf(-tail.alpha_hat));
        rows.push(CcdfRow { size: s, empirical: (sizes.len() - i) as f64 / n, model });
        while i < sizes.len() && sizes[i] == s {
            i += 1;
        }
    }
    run.write_csv(csv, &rows)?;
    let emp = rows.iter().map(|r| (r.size as f64, r.empirical)).collect();
    let model = rows.iter().filter_map(|r| Some((r.size as f64, r.model?))).collect();
    Ok(vec![Chart::new("municipality sizes", "workers", "P(N >= n)")
        .log_x()
        .log_y()
        .with(Series::new("empirical", emp, Mark::Dots))
        .with(Series::new(format!("power law, alpha = {:.2}", tail.alpha_hat), model, Mark::Line))])
}

#[derive(Debug, Clone, Serialize)]
struct Table1Row {
    column: usize,
    sample: &'static str,
    location: &'static str,
    slope: f64,
    slope_se: f64,
    slope_p: f64,
    intercept: f64,
    intercept_se: f64,
    workers: usize,
    municipalities: usize,
    r2: f64,
    adj_r2: f64,
    f_stat: f64,
    df1: usize,
    df2: usize,
    z_vs_real: Option<f64>,
    p_vs_real: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct MunicipalityRow {
    municipality: String,
    size: u64,
    mean_wage: f64,
}

fn table1(csv: &Path, run: &mut Run, seed: u64, args: &ReproduceArgs, table: &WorkerTable) -> Result<Vec<Chart>> {
    let (table, _) = ingest::drop_small_municipalities(table, args.min_size)?;
    let sizes = table.municipality_sizes();
    let mut fits: Vec<(OlsFit<f64>, usize, usize)> = Vec::new();
    let mut rows = Vec::new();
    for (fi, (fraction, sample)) in [(1.0, "full"), (0.001, "0.1%")].into_iter().enumerate() {
        let mut s = Stream::derive(seed, &[fi as u64, 0]);
        let sub = randomize::subsample(&table, fraction, &mut s)?;
        let real = randomize::municipality_regression(&sub, &sizes)?;
        let moved = randomize::permute_locations(&sub, &mut Stream::derive(seed, &[fi as u64, 0, 1]));
        let rand = randomize::municipality_regression(&moved, &sizes)?;
        let cmp = compare_coefficients((rand.fit.slope, rand.fit.slope_se), (real.fit.slope, real.fit.slope_se))?;
        for (k, (location, m)) in [("real", &real), ("randomized", &rand)].into_iter().enumerate() {
            let f = &m.fit;
            rows.push(Table1Row {
                column: 2 * fi + k + 1,
                sample,
                location,
                slope: f.slope,
                slope_se: f.slope_se,
                slope_p: f.slope_p_value(),
                intercept: f.intercept,
                intercept_se: f.intercept_se,
                workers: sub.len(),
                municipalities: m.municipalities,
                r2: f.r2,
                adj_r2: f.adj_r2,
                f_stat: f.f_stat,
                df1: f.df.0,
                df2: f.df.1,
                z_vs_real: (k == 1).then_some(cmp.z_stat),
                p_vs_real: (k == 1).then_some(cmp.p_value),
            });
            fits.push((f.clone(), sub.len(), m.municipalities));
        }
    }
    run.write_csv(csv, &rows)?;

    let headers = ["(1) real", "(2) randomized", "(3) real 0.1%", "(4) randomized 0.1%"];
    let columns: Vec<Column> = fits.iter().zip(headers).map(|((f, _, _), h)| Column { header: h.into(), fit: f }).collect();
    let extra = vec![
        ("Num. workers".to_string(), fits.iter().map(|f| f.1.to_string()).collect()),
        ("Num. municipalities".to_string(), fits.iter().map(|f| f.2.to_string()).collect()),
    ];
    let text = table::render("ln(average monthly wage)", "ln(employment size)", &columns, &extra);
    print!("{text}");
    run.write_text(&csv.with_extension("txt"), &text)?;

    let mut sums = vec![0.0; sizes.len()];
    for (&m, &w) in table.municipality.iter().zip(&table.wages) {
        sums[m as usize] += w;
    }
    let scatter: Vec<MunicipalityRow> = sizes
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0)
        .map(|(k, &s)| MunicipalityRow { municipality: table.labels[k].clone(), size: s, mean_wage: sums[k] / s as f64 })
        .collect();
    run.write_csv(&sibling(csv, "municipalities", "csv"), &scatter)?;
    let f = &fits[0].0;
    let pts: Vec<(f64, f64)> = scatter.iter().map(|r| (r.size as f64, r.mean_wage)).collect();
    let (lo, hi) = pts.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let line = vec![(lo, (f.intercept + f.slope * lo.ln()).exp()), (hi, (f.intercept + f.slope * hi.ln()).exp())];
    Ok(vec![Chart::new("average wage by municipality", "employment size", "average monthly wage")
        .log_x()
        .log_y()
        .with(Series::new("municipalities", pts, Mark::Dots))
        .with(Series::new(format!("slope = {:.3}", f.slope), line, Mark::Line))])
}

fn model_table(csv: &Path, run: &mut Run, p: &Prepared, opts: &FitOptions) -> Result<Vec<Chart>> {
    let ranked = data::fit_table(p, &uwp_core::distributions::FamilyKind::ALL, opts)?;
    let rows: Vec<ModelRow> = ranked.iter().map(ModelRow::from).collect();
    run.write_csv(csv, &rows)?;
    let best = ranked[0].kind();
    let diag = data::diagnostics_for(p, best, opts, 60)?;
    run.write_csv(&sibling(csv, "diagnostics", "csv"), &diag)?;
    Ok(data::diagnostic_charts(best.tag(), &diag))
}

fn table_c2(csv: &Path, run: &mut Run, seed: u64, args: &ReproduceArgs, table: &WorkerTable) -> Result<Vec<Chart>> {
    let sizes: Vec<f64> = table.municipality_sizes().into_iter().filter(|&s| s > 0).map(|s| s as f64).collect();
    let p = data::prepare(sizes, None, true, None, seed)?;
    let opts = FitOptions { bootstrap: args.bootstrap, seed, ..Default::default() };
    model_table(csv, run, &p, &opts)
}

fn table_c3(csv: &Path, run: &mut Run, seed: u64, args: &ReproduceArgs, table: &WorkerTable) -> Result<Vec<Chart>> {
    let floor = table.wages.iter().copied().fold(f64::INFINITY, f64::min);
    let p = data::prepare(table.wages.clone(), Some(floor), false, Some(args.max_values), seed)?;
    let opts = FitOptions { bootstrap: args.bootstrap, dedupe: true, seed, ..Default::default() };
    model_table(csv, run, &p, &opts)
}
