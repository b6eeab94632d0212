//! Worker-relocation permutation test.
//!
//! For each fraction `f` a subsample of workers is drawn without
//! replacement, the average wage of each municipality is regressed on its
//! (full-population) size, and the municipality column of the subsample is
//! then shuffled many times to obtain the distribution of slopes when
//! location carries no information.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::regress::{compare_coefficients, ols, OlsFit, StandardErrors};
use crate::rng::Stream;
use crate::simulate::percentile;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorkerTable {
    pub worker_ids: Vec<u64>,
    /// Municipality code per row, indexing `labels`.
    pub municipality: Vec<u32>,
    pub labels: Vec<String>,
    pub wages: Vec<f64>,
}

impl WorkerTable {
    /// Build a table from rows, interning municipality labels in order of appearance.
    pub fn from_rows<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, &'a str, f64)>,
    {
        let mut table = WorkerTable::default();
        let mut index: HashMap<String, u32> = HashMap::new();
        for (id, label, wage) in rows {
            if !(wage > 0.0) || !wage.is_finite() {
                return Err(Error::param("monthly_wage", format!("{wage} for worker {id} must be positive")));
            }
            let code = match index.get(label) {
                Some(&c) => c,
                None => {
                    let c = table.labels.len() as u32;
                    table.labels.push(label.to_string());
                    index.insert(label.to_string(), c);
                    c
                }
            };
            table.worker_ids.push(id);
            table.municipality.push(code);
            table.wages.push(wage);
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.wages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wages.is_empty()
    }

    /// Row count per municipality code.
    pub fn municipality_sizes(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.labels.len()];
        for &m in &self.municipality {
            counts[m as usize] += 1;
        }
        counts
    }

    fn select(&self, rows: &[u32]) -> Self {
        Self {
            worker_ids: rows.iter().map(|&r| self.worker_ids[r as usize]).collect(),
            municipality: rows.iter().map(|&r| self.municipality[r as usize]).collect(),
            labels: self.labels.clone(),
            wages: rows.iter().map(|&r| self.wages[r as usize]).collect(),
        }
    }
}

/// `round(fraction * rows)` with halves rounded up.
pub fn subsample_count(rows: usize, fraction: f64) -> usize {
    (fraction * rows as f64 + 0.5).floor() as usize
}

/// Sorted row indices of a sample without replacement.
pub fn subsample_rows(rows: usize, fraction: f64, stream: &mut Stream) -> Result<Vec<u32>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param("fraction", format!("{fraction} not in (0, 1]")));
    }
    if rows > u32::MAX as usize {
        return Err(Error::ResourceGuard { requested: rows as u64, cap: u32::MAX as u64 });
    }
    let count = subsample_count(rows, fraction).min(rows);
    if count == 0 {
        return Err(Error::EmptyInput("subsample"));
    }
    let mut idx: Vec<u32> = (0..rows as u32).collect();
    if count < rows {
        // partial Fisher-Yates: the first `count` slots are a uniform sample
        for i in 0..count {
            let j = i + stream.below((rows - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(count);
        idx.sort_unstable();
    }
    Ok(idx)
}

pub fn subsample(table: &WorkerTable, fraction: f64, stream: &mut Stream) -> Result<WorkerTable> {
    let rows = subsample_rows(table.len(), fraction, stream)?;
    Ok(table.select(&rows))
}

/// Shuffle the municipality column; wages and worker ids stay in place.
pub fn permute_locations(table: &WorkerTable, stream: &mut Stream) -> WorkerTable {
    let mut out = table.clone();
    stream.shuffle(&mut out.municipality);
    out
}

/// Regression of log average wage on log municipality size.
#[derive(Debug, Clone, PartialEq)]
pub struct MunicipalityFit {
    pub fit: OlsFit<f64>,
    /// Municipalities with at least one row in the table.
    pub municipalities: usize,
    /// Municipalities with no rows in the table.
    pub dropped: usize,
}

struct Design {
    /// Municipality codes kept, in code order.
    kept: Vec<u32>,
    x: Vec<f64>,
    counts: Vec<u64>,
    dropped: usize,
}

fn design(municipality: &[u32], sizes: &[u64]) -> Design {
    let mut counts = vec![0u64; sizes.len()];
    for &m in municipality {
        counts[m as usize] += 1;
    }
    let kept: Vec<u32> = (0..sizes.len() as u32).filter(|&k| counts[k as usize] > 0).collect();
    let x = kept.iter().map(|&k| (sizes[k as usize] as f64).ln()).collect();
    let present = sizes.iter().filter(|&&s| s > 0).count();
    Design { dropped: present - kept.len(), kept, x, counts }
}

fn fit_on(design: &Design, municipality: &[u32], wages: &[f64], sums: &mut Vec<f64>) -> Result<OlsFit<f64>> {
    sums.clear();
    sums.resize(design.counts.len(), 0.0);
    for (&m, &w) in municipality.iter().zip(wages) {
        sums[m as usize] += w;
    }
    let y: Vec<f64> = design
        .kept
        .iter()
        .map(|&k| (sums[k as usize] / design.counts[k as usize] as f64).ln())
        .collect();
    ols(&design.x, &y, StandardErrors::Plain)
}

/// Regress log average wage per municipality on `ln sizes[k]`.
/// Municipalities without rows are dropped and counted.
pub fn municipality_regression(table: &WorkerTable, sizes: &[u64]) -> Result<MunicipalityFit> {
    if sizes.len() < table.labels.len() {
        return Err(Error::LengthMismatch { left: sizes.len(), right: table.labels.len() });
    }
    let d = design(&table.municipality, sizes);
    let fit = fit_on(&d, &table.municipality, &table.wages, &mut Vec::new())?;
    Ok(MunicipalityFit { fit, municipalities: d.kept.len(), dropped: d.dropped })
}

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub fractions: Vec<f64>,
    pub subsample_repeats: usize,
    pub permutations: usize,
    pub seed: u64,
    /// Significance level for both tests.
    pub level: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            fractions: vec![0.001, 0.005, 0.01, 0.05, 0.1, 1.0],
            subsample_repeats: 10,
            permutations: 1000,
            seed: 0,
            level: 0.01,
        }
    }
}

/// Slope of one randomized run and its two tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomizedFit {
    pub slope: f64,
    pub se: f64,
    pub intercept: f64,
    pub r2: f64,
    pub p_vs_zero: f64,
    pub z_vs_real: f64,
    pub p_vs_real: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizationReport {
    pub fraction: f64,
    pub subsample_index: usize,
    pub workers: usize,
    pub municipalities: usize,
    pub dropped_municipalities: usize,
    pub real: OlsFit<f64>,
    pub randomized: Vec<RandomizedFit>,
    /// 2.5% and 97.5% points of the randomized slopes.
    pub envelope: (f64, f64),
    pub median_randomized_slope: f64,
    pub share_significant_vs_zero: f64,
    pub share_different_from_real: f64,
}

fn run_one(
    table: &WorkerTable,
    sizes: &[u64],
    cfg: &ProtocolConfig,
    fi: usize,
    fraction: f64,
    rep: usize,
) -> Result<RandomizationReport> {
    let path = [fi as u64, rep as u64];
    let mut sample_stream = Stream::derive(cfg.seed, &path);
    let rows = subsample_rows(table.len(), fraction, &mut sample_stream)?;
    let municipality: Vec<u32> = rows.iter().map(|&r| table.municipality[r as usize]).collect();
    let wages: Vec<f64> = rows.iter().map(|&r| table.wages[r as usize]).collect();
    let d = design(&municipality, sizes);
    let real = fit_on(&d, &municipality, &wages, &mut Vec::new())?;

    let randomized: Vec<RandomizedFit> = (0..cfg.permutations)
        .into_par_iter()
        .map_init(
            || (municipality.clone(), Vec::new()),
            |(buf, sums), j| {
                buf.copy_from_slice(&municipality);
                Stream::derive(cfg.seed, &[fi as u64, rep as u64, j as u64 + 1]).shuffle(buf);
                let fit = fit_on(&d, buf, &wages, sums)?;
                let cmp = compare_coefficients((fit.slope, fit.slope_se), (real.slope, real.slope_se))?;
                Ok(RandomizedFit {
                    slope: fit.slope,
                    se: fit.slope_se,
                    intercept: fit.intercept,
                    r2: fit.r2,
                    p_vs_zero: fit.slope_p_value(),
                    z_vs_real: cmp.z_stat,
                    p_vs_real: cmp.p_value,
                })
            },
        )
        .collect::<Result<_>>()?;

    let mut slopes: Vec<f64> = randomized.iter().map(|r| r.slope).collect();
    slopes.sort_by(f64::total_cmp);
    let (envelope, median) = if slopes.is_empty() {
        ((f64::NAN, f64::NAN), f64::NAN)
    } else {
        ((percentile(&slopes, 0.025), percentile(&slopes, 0.975)), percentile(&slopes, 0.5))
    };
    let share = |pred: &dyn Fn(&RandomizedFit) -> bool| {
        if randomized.is_empty() {
            f64::NAN
        } else {
            randomized.iter().filter(|r| pred(r)).count() as f64 / randomized.len() as f64
        }
    };
    Ok(RandomizationReport {
        fraction,
        subsample_index: rep,
        workers: rows.len(),
        municipalities: d.kept.len(),
        dropped_municipalities: d.dropped,
        envelope,
        median_randomized_slope: median,
        share_significant_vs_zero: share(&|r| r.p_vs_zero < cfg.level),
        share_different_from_real: share(&|r| r.p_vs_real < cfg.level),
        real,
        randomized,
    })
}

/// Run the protocol, handing each report to `sink` as soon as it is ready.
pub fn run_protocol_streaming<S>(table: &WorkerTable, cfg: &ProtocolConfig, mut sink: S) -> Result<()>
where
    S: FnMut(RandomizationReport) -> Result<()>,
{
    if table.is_empty() {
        return Err(Error::EmptyInput("worker table"));
    }
    if cfg.fractions.is_empty() {
        return Err(Error::EmptyInput("fractions"));
    }
    if cfg.subsample_repeats == 0 {
        return Err(Error::param("subsample_repeats", "must be at least 1"));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::param("level", format!("{} not in (0, 1)", cfg.level)));
    }
    let sizes = table.municipality_sizes();
    for (fi, &fraction) in cfg.fractions.iter().enumerate() {
        let repeats = if fraction >= 1.0 { 1 } else { cfg.subsample_repeats };
        for rep in 0..repeats {
            sink(run_one(table, &sizes, cfg, fi, fraction, rep)?)?;
        }
    }
    Ok(())
}

pub fn run_protocol(table: &WorkerTable, cfg: &ProtocolConfig) -> Result<Vec<RandomizationReport>> {
    let mut out = Vec::new();
    run_protocol_streaming(table, cfg, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok(out)
}

/// One line of the long-format report.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReportRow {
    pub fraction: f64,
    pub subsample: usize,
    pub kind: &'static str,
    pub rep: usize,
    pub slope: f64,
    pub se: f64,
    pub p_vs_zero: f64,
    pub z_vs_real: f64,
    pub p_vs_real: f64,
}

impl RandomizationReport {
    /// The real row followed by one row per permutation.
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::with_capacity(self.randomized.len() + 1);
        rows.push(ReportRow {
            fraction: self.fraction,
            subsample: self.subsample_index,
            kind: "real",
            rep: 0,
            slope: self.real.slope,
            se: self.real.slope_se,
            p_vs_zero: self.real.slope_p_value(),
            z_vs_real: 0.0,
            p_vs_real: 1.0,
        });
        rows.extend(self.randomized.iter().enumerate().map(|(j, r)| ReportRow {
            fraction: self.fraction,
            subsample: self.subsample_index,
            kind: "rand",
            rep: j,
            slope: r.slope,
            se: r.se,
            p_vs_zero: r.p_vs_zero,
            z_vs_real: r.z_vs_real,
            p_vs_real: r.p_vs_real,
        }));
        rows
    }
}
