//! Commands that read or write data files.

use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use uwp_core::distributions::{FamilyKind, Lognormal, Pareto};
use uwp_core::fit::{self, FitOptions, FittedDistribution, ModelRow};
use uwp_core::ingest::{self, CleaningConfig, DirtRates, SynthSpec};
use uwp_core::randomize::{self, ProtocolConfig, RandomizationReport, WorkerTable};
use uwp_core::regress::{self, LogBase, OlsOptions, ResponseMode, StandardErrors};
use uwp_core::rng::Stream;
use uwp_core::simulate::percentile;

use crate::output::{sibling, Run};
use crate::svg::{self, Chart, Mark, Series};
use crate::table::{self, Column};
use crate::{Ctx, NumericFailure};

/// Read one numeric column by header name.
pub fn read_column<R: Read>(input: R, name: &str) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_reader(input);
    let idx = reader
        .headers()?
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| anyhow!(uwp_core::Error::InvalidParameter { name: "column", reason: format!("no column `{name}`") }))?;
    let mut out = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(idx).unwrap_or("").trim();
        let v: f64 = cell.parse().map_err(|_| {
            anyhow!(uwp_core::Error::InvalidParameter {
                name: "column",
                reason: format!("row {}: `{cell}` in `{name}` is not a number", line + 2)
            })
        })?;
        out.push(v);
    }
    Ok(out)
}

fn read_columns(path: &Path, run: &mut Run, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut text = String::new();
    run.open(path)?.read_to_string(&mut text)?;
    names.iter().map(|n| read_column(text.as_bytes(), n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Log {
    Natural,
    Log10,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegressArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Size column.
    #[arg(long)]
    pub x: String,
    /// Response column.
    #[arg(long)]
    pub y: String,
    #[arg(long, value_enum, default_value_t = Log::Natural)]
    pub log: Log,
    /// Divide the response by the size before taking logs.
    #[arg(long)]
    pub per_capita: bool,
    /// Heteroskedasticity-consistent standard errors.
    #[arg(long)]
    pub hc1: bool,
    /// Also write the coefficients as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientRow {
    pub term: &'static str,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub n_obs: usize,
    pub r2: f64,
    pub adj_r2: f64,
    pub f_stat: f64,
    pub df1: usize,
    pub df2: usize,
}

pub fn regress(args: &RegressArgs, ctx: &Ctx) -> Result<()> {
    let mut run = ctx.run();
    let cols = read_columns(&args.input, &mut run, &[&args.x, &args.y])?;
    let opts = OlsOptions {
        mode: if args.per_capita { ResponseMode::PerCapita } else { ResponseMode::Total },
        base: match args.log {
            Log::Natural => LogBase::Natural,
            Log::Log10 => LogBase::Log10,
        },
        errors: if args.hc1 { StandardErrors::Hc1 } else { StandardErrors::Plain },
    };
    let fit = regress::ols_loglog_with(&cols[0], &cols[1], opts)?;
    let log = match args.log {
        Log::Natural => "ln",
        Log::Log10 => "log10",
    };
    let dependent = if args.per_capita { format!("{log}({}/{})", args.y, args.x) } else { format!("{log}({})", args.y) };
    let text = table::render(&dependent, &format!("{log}({})", args.x), &[Column { header: "(1)".into(), fit: &fit }], &[]);
    print!("{text}");
    if let Some(out) = &args.out {
        let row = |term, estimate, std_error: f64, t_stat, p_value| CoefficientRow {
            term,
            estimate,
            std_error,
            t_stat,
            p_value,
            n_obs: fit.n_obs,
            r2: fit.r2,
            adj_r2: fit.adj_r2,
            f_stat: fit.f_stat,
            df1: fit.df.0,
            df2: fit.df.1,
        };
        let rows = [
            row("slope", fit.slope, fit.slope_se, fit.slope_t(), fit.slope_p_value()),
            row("intercept", fit.intercept, fit.intercept_se, fit.intercept_t(), fit.intercept_p_value()),
        ];
        run.write_csv(out, rows)?;
        run.finish("regress", ctx.seed, args, out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RandomizeArgs {
    /// Clean worker table (worker_id,municipality_id,monthly_wage).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.005,0.01,0.05,0.1,1.0")]
    pub fractions: Vec<f64>,
    /// Independent subsamples per fraction below 1.
    #[arg(long, default_value_t = 10)]
    pub subsamples: usize,
    #[arg(long, default_value_t = 1000)]
    pub permutations: usize,
    /// Significance level of both tests.
    #[arg(long, default_value_t = 0.01)]
    pub level: f64,
    /// Drop municipalities with fewer workers than this first.
    #[arg(long, default_value_t = 1)]
    pub min_size: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub fraction: f64,
    pub subsample: usize,
    pub workers: usize,
    pub municipalities: usize,
    pub dropped_municipalities: usize,
    pub real_slope: f64,
    pub real_se: f64,
    pub real_p: f64,
    pub randomized_median: f64,
    pub randomized_lo: f64,
    pub randomized_hi: f64,
    pub share_significant_vs_zero: f64,
    pub share_different_from_real: f64,
}

impl From<&RandomizationReport> for SummaryRow {
    fn from(r: &RandomizationReport) -> Self {
        Self {
            fraction: r.fraction,
            subsample: r.subsample_index,
            workers: r.workers,
            municipalities: r.municipalities,
            dropped_municipalities: r.dropped_municipalities,
            real_slope: r.real.slope,
            real_se: r.real.slope_se,
            real_p: r.real.slope_p_value(),
            randomized_median: r.median_randomized_slope,
            randomized_lo: r.envelope.0,
            randomized_hi: r.envelope.1,
            share_significant_vs_zero: r.share_significant_vs_zero,
            share_different_from_real: r.share_different_from_real,
        }
    }
}

pub fn load_workers(path: &Path, run: &mut Run, min_size: u64) -> Result<WorkerTable> {
    let table = ingest::read_workers(run.open(path)?).with_context(|| format!("reading {}", path.display()))?;
    if min_size <= 1 {
        return Ok(table);
    }
    let (kept, report) = ingest::drop_small_municipalities(&table, min_size)?;
    eprintln!(
        "dropped {} municipalities ({} workers) below {min_size}",
        report.municipalities_dropped, report.workers_dropped
    );
    Ok(kept)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.retain(|x| x.is_finite());
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    percentile(&v, 0.5)
}

/// Real slopes, randomized envelopes, and test shares against the fraction.
pub fn randomization_charts(rows: &[SummaryRow]) -> Vec<Chart> {
    let mut fractions: Vec<f64> = rows.iter().map(|r| r.fraction).collect();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();
    let per = |f: f64, pick: fn(&SummaryRow) -> f64| median(rows.iter().filter(|r| r.fraction == f).map(pick).collect());
    let band: Vec<(f64, f64)> = fractions.iter().map(|&f| (f, per(f, |r| r.randomized_lo))).collect();
    let upper: Vec<f64> = fractions.iter().map(|&f| per(f, |r| r.randomized_hi)).collect();
    let med: Vec<(f64, f64)> = fractions.iter().map(|&f| (f, per(f, |r| r.randomized_median))).collect();
    let real: Vec<(f64, f64)> = rows.iter().map(|r| (r.fraction, r.real_slope)).collect();
    let slopes = Chart::new("elasticity before and after relocation", "fraction sampled", "slope")
        .log_x()
        .with(Series::new("randomized 95%", band, Mark::Band(upper)))
        .with(Series::new("randomized median", med, Mark::Line))
        .with(Series::new("real", real, Mark::Dots));
    let sig: Vec<(f64, f64)> = fractions.iter().map(|&f| (f, per(f, |r| r.share_significant_vs_zero))).collect();
    let diff: Vec<(f64, f64)> = fractions.iter().map(|&f| (f, per(f, |r| r.share_different_from_real))).collect();
    let shares = Chart::new("share of randomized runs", "fraction sampled", "share")
        .log_x()
        .with(Series::new("slope != 0", sig, Mark::Line))
        .with(Series::new("slope != real", diff, Mark::Dashed));
    vec![slopes, shares]
}

pub fn run_randomization(table: &WorkerTable, cfg: &ProtocolConfig, out: &Path, run: &mut Run) -> Result<Vec<SummaryRow>> {
    let mut writer = csv::Writer::from_writer(run.create(out)?);
    let mut summary = Vec::new();
    randomize::run_protocol_streaming(table, cfg, |report| {
        for row in report.rows() {
            writer.serialize(row)?;
        }
        eprintln!(
            "fraction {} subsample {}: real {:.4}, randomized median {:.4}",
            report.fraction, report.subsample_index, report.real.slope, report.median_randomized_slope
        );
        summary.push(SummaryRow::from(&report));
        Ok(())
    })?;
    writer.flush()?;
    run.write_csv(&sibling(out, "summary", "csv"), &summary)?;
    Ok(summary)
}

pub fn randomize_test(args: &RandomizeArgs, ctx: &Ctx) -> Result<()> {
    let mut run = ctx.run();
    let table = load_workers(&args.input, &mut run, args.min_size)?;
    let cfg = ProtocolConfig {
        fractions: args.fractions.clone(),
        subsample_repeats: args.subsamples,
        permutations: args.permutations,
        seed: ctx.seed,
        level: args.level,
    };
    let summary = run_randomization(&table, &cfg, &args.out, &mut run)?;
    if let Some(path) = &args.svg {
        run.write_text(path, &svg::render(&randomization_charts(&summary)))?;
    }
    run.finish("randomize-test", ctx.seed, args, &args.out)?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub column: String,
    /// `all` or a comma-separated list of family tags.
    #[arg(long, default_value = "all")]
    pub families: String,
    /// Fit only values at or above this bound, renormalizing truncated families.
    #[arg(long)]
    pub truncate_at: Option<f64>,
    /// Choose the bound by KS-minimizing power-law tail estimation.
    #[arg(long, conflicts_with = "truncate_at")]
    pub tail: bool,
    /// Keep one copy of values equal to the bound.
    #[arg(long)]
    pub dedupe: bool,
    #[arg(long, default_value_t = 499)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Fit a deterministic subsample of at most this many values.
    #[arg(long)]
    pub max_values: Option<usize>,
    /// Emit Q-Q, P-P and CCDF data for --family instead of a model table.
    #[arg(long, requires = "family")]
    pub diagnostics: bool,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, default_value_t = 60)]
    pub grid_points: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

pub fn parse_families(spec: &str) -> Result<Vec<FamilyKind>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(FamilyKind::ALL.to_vec());
    }
    Ok(spec.split(',').map(|s| s.parse::<FamilyKind>()).collect::<uwp_core::Result<_>>()?)
}

/// Values prepared for fitting, with the bound shared by every family.
pub struct Prepared {
    pub values: Vec<f64>,
    pub bound: Option<f64>,
}

pub fn prepare(mut values: Vec<f64>, bound: Option<f64>, tail: bool, max_values: Option<usize>, seed: u64) -> Result<Prepared> {
    if let Some(cap) = max_values {
        if cap < values.len() {
            let mut s = Stream::derive(seed, &[u64::MAX - 1]);
            let rows = randomize::subsample_rows(values.len(), cap as f64 / values.len() as f64, &mut s)?;
            values = rows.iter().map(|&r| values[r as usize]).collect();
        }
    }
    let bound = if tail {
        let t = fit::estimate_pareto_tail(&values)?;
        eprintln!("tail: n_min = {} alpha = {:.4} ks = {:.4} n_tail = {}", t.n_min_hat, t.alpha_hat, t.ks_distance, t.n_tail);
        Some(t.n_min_hat)
    } else {
        bound
    };
    if let Some(b) = bound {
        values.retain(|&x| x >= b);
    }
    Ok(Prepared { values, bound })
}

/// Fit every family on the same data and rank by AIC.
pub fn fit_table(p: &Prepared, families: &[FamilyKind], opts: &FitOptions) -> Result<Vec<FittedDistribution>> {
    let needs_bound = families.iter().any(|k| k.needs_bound());
    let bound = match p.bound {
        Some(b) => Some(b),
        None if needs_bound => p.values.iter().copied().reduce(f64::min),
        None => None,
    };
    let opts = FitOptions { truncation: bound, ..opts.clone() };
    let mut fits = Vec::new();
    for &kind in families {
        match fit::fit_family(&p.values, kind, &opts) {
            Ok(f) => {
                if f.unreliable {
                    eprintln!("warning: {kind} did not converge; estimates are unreliable");
                }
                fits.push(f);
            }
            Err(e) => eprintln!("warning: {kind} skipped: {e}"),
        }
    }
    if fits.is_empty() {
        bail!(NumericFailure("no family could be fitted".into()));
    }
    if fits.iter().all(|f| f.unreliable) {
        bail!(NumericFailure("no family converged".into()));
    }
    Ok(fit::rank_models(&fits)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticRow {
    pub panel: &'static str,
    pub x: f64,
    pub empirical: f64,
    pub model: f64,
}

pub fn diagnostic_rows(d: &fit::Diagnostics) -> Vec<DiagnosticRow> {
    let qq = d.qq.iter().map(|&(m, e)| DiagnosticRow { panel: "qq", x: m, empirical: e, model: m });
    let pp = d.pp.iter().map(|&(m, e)| DiagnosticRow { panel: "pp", x: m, empirical: e, model: m });
    let cc = d.ccdf.iter().map(|c| DiagnosticRow { panel: "ccdf", x: c.x, empirical: c.empirical, model: c.model });
    qq.chain(pp).chain(cc).collect()
}

pub fn diagnostic_charts(tag: &str, rows: &[DiagnosticRow]) -> Vec<Chart> {
    let pick = |panel: &str, f: fn(&DiagnosticRow) -> (f64, f64)| -> Vec<(f64, f64)> {
        rows.iter().filter(|r| r.panel == panel).map(f).collect()
    };
    let qq = Chart::new(&format!("Q-Q {tag}"), "model quantile", "observed")
        .log_x()
        .log_y()
        .with(Series::new("data", pick("qq", |r| (r.x, r.empirical)), Mark::Dots))
        .with(Series::new("identity", pick("qq", |r| (r.x, r.model)), Mark::Line));
    let pp = Chart::new(&format!("P-P {tag}"), "model CDF", "empirical CDF")
        .with(Series::new("data", pick("pp", |r| (r.x, r.empirical)), Mark::Dots))
        .with(Series::new("identity", pick("pp", |r| (r.x, r.model)), Mark::Line));
    let cc = Chart::new(&format!("CCDF {tag}"), "x", "P(X >= x)")
        .log_x()
        .log_y()
        .with(Series::new("empirical", pick("ccdf", |r| (r.x, r.empirical)), Mark::Dots))
        .with(Series::new("model", pick("ccdf", |r| (r.x, r.model)), Mark::Line));
    vec![qq, pp, cc]
}

pub fn diagnostics_for(p: &Prepared, kind: FamilyKind, opts: &FitOptions, grid_points: usize) -> Result<Vec<DiagnosticRow>> {
    let bound = p.bound.or_else(|| kind.needs_bound().then(|| p.values.iter().copied().fold(f64::INFINITY, f64::min)));
    let opts = FitOptions { truncation: bound, bootstrap: 0, ..opts.clone() };
    let fitted = fit::fit_family(&p.values, kind, &opts)?;
    if fitted.unreliable {
        bail!(NumericFailure(format!("{kind} did not converge")));
    }
    let values = match (opts.dedupe, bound) {
        (true, Some(b)) => fit::dedupe_at_bound(&p.values, b),
        _ => p.values.clone(),
    };
    Ok(diagnostic_rows(&fit::diagnostic_data(&fitted.family, &values, grid_points)?))
}

pub fn fit_options(args: &FitArgs, seed: u64) -> FitOptions {
    FitOptions { dedupe: args.dedupe, bootstrap: args.bootstrap, confidence: args.confidence, seed, ..Default::default() }
}

pub fn fit_cmd(args: &FitArgs, ctx: &Ctx) -> Result<()> {
    let mut run = ctx.run();
    let values = read_columns(&args.input, &mut run, &[&args.column])?.remove(0);
    let p = prepare(values, args.truncate_at, args.tail, args.max_values, ctx.seed)?;
    let opts = fit_options(args, ctx.seed);
    if args.diagnostics {
        let kind: FamilyKind = args.family.as_deref().unwrap_or_default().parse()?;
        let rows = diagnostics_for(&p, kind, &opts, args.grid_points)?;
        run.write_csv(&args.out, &rows)?;
        if let Some(path) = &args.svg {
            run.write_text(path, &svg::render(&diagnostic_charts(kind.tag(), &rows)))?;
        }
    } else {
        let ranked = fit_table(&p, &parse_families(&args.families)?, &opts)?;
        let rows: Vec<ModelRow> = ranked.iter().map(ModelRow::from).collect();
        run.write_csv(&args.out, &rows)?;
        if let Some(path) = &args.svg {
            let best = ranked[0].kind();
            let rows = diagnostics_for(&p, best, &opts, args.grid_points)?;
            run.write_text(path, &svg::render(&diagnostic_charts(best.tag(), &rows)))?;
        }
    }
    run.finish("fit", ctx.seed, args, &args.out)?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    /// Raw contribution records.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 616_000)]
    pub min_wage: i64,
    #[arg(long, default_value_t = 30)]
    pub min_days: i64,
    /// Inclusive age range `low:high`.
    #[arg(long, default_value = "15:64")]
    pub age: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the rejection counts as JSON.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
}

pub fn parse_age(s: &str) -> Result<(i64, i64)> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| anyhow!(uwp_core::Error::InvalidParameter {
        name: "age",
        reason: format!("`{s}` is not of the form low:high")
    }))?;
    let parse = |v: &str| {
        v.trim().parse::<i64>().map_err(|_| {
            anyhow!(uwp_core::Error::InvalidParameter { name: "age", reason: format!("`{v}` is not an integer") })
        })
    };
    Ok((parse(lo)?, parse(hi)?))
}

pub fn ingest_cmd(args: &IngestArgs, ctx: &Ctx) -> Result<()> {
    let (min_age, max_age) = parse_age(&args.age)?;
    let cfg = CleaningConfig { minimum_monthly_wage: args.min_wage, min_days: args.min_days, min_age, max_age, ..Default::default() };
    let mut run = ctx.run();
    let input = run.open(&args.input)?;
    let output = run.create(&args.out)?;
    let ledger = ingest::clean_csv(input, output, &cfg)?;
    eprintln!("kept {} of {} rows", ledger.kept, ledger.input_rows);
    if let Some(path) = &args.ledger {
        let mut text = serde_json::to_string_pretty(&ledger)?;
        text.push('\n');
        run.write_text(path, &text)?;
    }
    run.finish("ingest", ctx.seed, args, &args.out)?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1117)]
    pub municipalities: usize,
    /// Pareto exponent of the large municipalities.
    #[arg(long, default_value_t = 0.67)]
    pub alpha: f64,
    #[arg(long, default_value_t = 287.0)]
    pub n_min: f64,
    /// Share of municipalities drawn from the Pareto law.
    #[arg(long, default_value_t = 553.0 / 1117.0)]
    pub tail_share: f64,
    /// Log-wage standard deviation.
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 10.23)]
    pub wage_log_scale: f64,
    #[arg(long, default_value_t = 616_000)]
    pub min_wage: i64,
    /// Target worker count; 0 keeps the first size draw.
    #[arg(long, default_value_t = 6_700_000)]
    pub workers: u64,
    #[arg(long, default_value_t = 50_000_000)]
    pub worker_cap: u64,
    /// Rate of each kind of injected dirty row, per clean row.
    #[arg(long, default_value_t = 0.0)]
    pub dirt: f64,
    #[arg(long)]
    pub out: PathBuf,
}

impl SynthArgs {
    pub fn spec(&self, seed: u64) -> Result<SynthSpec> {
        let d = self.dirt;
        Ok(SynthSpec {
            municipalities: self.municipalities,
            sizes: Pareto::new(self.n_min, self.alpha)?,
            tail_share: self.tail_share,
            wages: Lognormal::new(self.wage_log_scale, self.sigma)?,
            minimum_monthly_wage: self.min_wage,
            target_workers: (self.workers > 0).then_some(self.workers),
            size_attempts: 64,
            worker_cap: self.worker_cap,
            dirt: DirtRates { unparseable: d, missing_field: d, wrong_type: d, short_days: d, bad_age: d, below_floor: d },
            seed,
        })
    }
}

pub fn synth_cmd(args: &SynthArgs, ctx: &Ctx) -> Result<()> {
    let synth = ingest::synth_pila(args.spec(ctx.seed)?)?;
    let mut run = ctx.run();
    let n = ingest::write_raw(synth.rows(), run.create(&args.out)?)?;
    eprintln!("wrote {n} rows for {} workers in {} municipalities", synth.total_workers(), synth.sizes.len());
    run.finish("synth-pila", ctx.seed, args, &args.out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_reading() {
        let text = "a,b\n1,2.5\n3,4\n";
        assert_eq!(read_column(text.as_bytes(), "b").unwrap(), vec![2.5, 4.0]);
        assert!(read_column(text.as_bytes(), "c").is_err());
        assert!(read_column("a\nx\n".as_bytes(), "a").is_err());
    }

    #[test]
    fn family_lists() {
        assert_eq!(parse_families("all").unwrap().len(), 13);
        assert_eq!(parse_families("powerlaw,trunclnorm").unwrap(), vec![FamilyKind::Pareto, FamilyKind::TruncLognormal]);
        assert!(parse_families("nope").is_err());
    }

    #[test]
    fn age_ranges() {
        assert_eq!(parse_age("15:64").unwrap(), (15, 64));
        assert!(parse_age("15-64").is_err());
        assert!(parse_age("a:64").is_err());
    }

    #[test]
    fn preparation_applies_bound_and_cap() {
        let values: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let p = prepare(values.clone(), Some(500.0), false, None, 0).unwrap();
        assert_eq!(p.values.len(), 501);
        let p = prepare(values, None, false, Some(100), 3).unwrap();
        assert_eq!(p.values.len(), 100);
        assert!(p.bound.is_none());
    }
}
