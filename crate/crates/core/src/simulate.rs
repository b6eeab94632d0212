//! City ensembles under the no-interaction null model.
//!
//! Each city draws a Pareto size and sums i.i.d. lognormal productivities.
//! City `k` of replicate `r` reads from its own stream `(seed, r, k)`, so
//! results do not depend on the order or thread in which cities run.

use rayon::prelude::*;

use crate::distributions::{Lognormal, LogSumExp, Pareto};
use crate::error::{Error, Result};
use crate::regress::{ols_loglog, ResponseMode};
use crate::rng::{derive_key, Stream};

/// Stream tag for the size draws, kept apart from city indices.
const SIZE_STREAM: u64 = u64::MAX;
const DEFAULT_WORKER_CAP: u64 = 1_000_000_000;
const DEFAULT_RETENTION_CAP: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub m: usize,
    pub sizes: Pareto<f64>,
    pub productivity: Lognormal<f64>,
    pub seed: u64,
    /// Replicate index; part of every stream key.
    pub replicate: u64,
    /// Build each productivity as a product of this many log-uniform traits.
    pub trait_count: Option<usize>,
    /// Reset the log scale so that mean productivity is 1 whenever sigma changes.
    pub unit_mean: bool,
    /// Refuse ensembles with more workers than this.
    pub worker_cap: u64,
    /// Keep per-worker productivities when the ensemble is at most this large.
    pub retain_workers: bool,
    pub retention_cap: u64,
}

impl EnsembleSpec {
    pub fn new(m: usize, sizes: Pareto<f64>, productivity: Lognormal<f64>, seed: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::param("m", format!("{m} cities; need at least 2")));
        }
        Ok(Self {
            m,
            sizes,
            productivity,
            seed,
            replicate: 0,
            trait_count: None,
            unit_mean: true,
            worker_cap: DEFAULT_WORKER_CAP,
            retain_workers: false,
            retention_cap: DEFAULT_RETENTION_CAP,
        })
    }

    /// Copy with a new sigma; the log scale follows `unit_mean`.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        let log_scale = if self.unit_mean { -sigma * sigma / 2.0 } else { self.productivity.log_scale() };
        Ok(Self { productivity: Lognormal::new(log_scale, sigma)?, ..self.clone() })
    }

    fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::param("m", format!("{} cities; need at least 2", self.m)));
        }
        if self.trait_count == Some(0) {
            return Err(Error::param("trait_count", "must be at least 1"));
        }
        Ok(())
    }

    /// Log scale and per-trait law actually used for sampling.
    fn worker_law(&self) -> Result<WorkerLaw> {
        let sigma = self.productivity.sigma();
        match self.trait_count {
            None => Ok(WorkerLaw::Lognormal { log_scale: self.productivity.log_scale(), sigma }),
            Some(s) => {
                let law = TraitLaw::log_uniform_for_variance(sigma * sigma, s)?;
                let log_scale = if self.unit_mean {
                    -(s as f64) * law.ln_mean()
                } else {
                    self.productivity.log_scale()
                };
                Ok(WorkerLaw::Traits { log_scale, count: s, law })
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum WorkerLaw {
    Lognormal { log_scale: f64, sigma: f64 },
    Traits { log_scale: f64, count: usize, law: TraitLaw },
}

impl WorkerLaw {
    #[inline]
    fn log_draw(&self, stream: &mut Stream) -> f64 {
        match *self {
            WorkerLaw::Lognormal { log_scale, sigma } => log_scale + sigma * stream.standard_normal(),
            WorkerLaw::Traits { log_scale, count, law } => {
                log_scale + (0..count).map(|_| law.log_draw(stream)).sum::<f64>()
            }
        }
    }
}

/// Law of a single positive trait `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraitLaw {
    /// `ln xi` uniform on `[-half_width, half_width]`.
    LogUniform { half_width: f64 },
    /// `xi` uniform on `[low, high]` with `low > 0`.
    Uniform { low: f64, high: f64 },
    Lognormal(Lognormal<f64>),
}

impl TraitLaw {
    /// Log-uniform traits whose product of `count` has log-variance `variance`.
    pub fn log_uniform_for_variance(variance: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::param("trait_count", "must be at least 1"));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::param("variance", format!("{variance} must be positive")));
        }
        Ok(TraitLaw::LogUniform { half_width: (3.0 * variance / count as f64).sqrt() })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            TraitLaw::LogUniform { half_width } if !(half_width >= 0.0 && half_width.is_finite()) => {
                Err(Error::param("half_width", format!("{half_width} must be finite and non-negative")))
            }
            TraitLaw::Uniform { low, high } if !(low > 0.0 && high >= low && high.is_finite()) => {
                Err(Error::param("support", format!("[{low}, {high}] must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// `ln E[xi]`.
    pub fn ln_mean(&self) -> f64 {
        match *self {
            TraitLaw::LogUniform { half_width: a } if a > 0.0 => (a.sinh() / a).ln(),
            TraitLaw::LogUniform { .. } => 0.0,
            TraitLaw::Uniform { low, high } => ((low + high) / 2.0).ln(),
            TraitLaw::Lognormal(l) => l.mean().ln(),
        }
    }

    #[inline]
    fn log_draw(&self, stream: &mut Stream) -> f64 {
        match *self {
            TraitLaw::LogUniform { half_width } => half_width * (2.0 * stream.uniform() - 1.0),
            TraitLaw::Uniform { low, high } => (low + (high - low) * stream.uniform_open()).ln(),
            TraitLaw::Lognormal(l) => l.log_scale() + l.sigma() * stream.standard_normal(),
        }
    }
}

/// `count` products of `trait_count` i.i.d. traits.
pub fn trait_product_sample(trait_count: usize, law: TraitLaw, stream: &mut Stream, count: usize) -> Result<Vec<f64>> {
    if trait_count == 0 {
        return Err(Error::param("trait_count", "must be at least 1"));
    }
    law.validate()?;
    Ok((0..count)
        .map(|_| (0..trait_count).map(|_| law.log_draw(stream)).sum::<f64>().exp())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct City {
    pub city_id: usize,
    pub size: u64,
    pub total_output: f64,
    pub log_total_output: f64,
}

impl City {
    pub fn per_capita_output(&self) -> f64 {
        (self.log_total_output - (self.size as f64).ln()).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CityEnsemble {
    pub cities: Vec<City>,
    /// Per-worker productivities by city, when retained.
    pub workers: Option<Vec<Vec<f64>>>,
}

impl CityEnsemble {
    pub fn sizes(&self) -> Vec<f64> {
        self.cities.iter().map(|c| c.size as f64).collect()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.cities.iter().map(|c| c.total_output).collect()
    }

    pub fn total_workers(&self) -> u64 {
        self.cities.iter().map(|c| c.size).sum()
    }
}

/// Integer city sizes: Pareto draws floored, never below `floor(n_min)`.
pub fn draw_sizes(spec: &EnsembleSpec) -> Result<Vec<u64>> {
    spec.validate()?;
    let mut stream = Stream::derive(spec.seed, &[spec.replicate, SIZE_STREAM]);
    let floor_min = spec.sizes.n_min().floor().max(1.0);
    let mut total = 0u64;
    let mut sizes = Vec::with_capacity(spec.m);
    for _ in 0..spec.m {
        let n = spec.sizes.from_uniform(stream.uniform()).floor().max(floor_min);
        if n > spec.worker_cap as f64 {
            return Err(Error::ResourceGuard { requested: n.min(u64::MAX as f64) as u64, cap: spec.worker_cap });
        }
        let n = n as u64;
        total = total.saturating_add(n);
        sizes.push(n);
    }
    if total > spec.worker_cap {
        return Err(Error::ResourceGuard { requested: total, cap: spec.worker_cap });
    }
    Ok(sizes)
}

/// Output of one city of size `n` read from its own stream.
fn city_output(law: &WorkerLaw, stream: &mut Stream, n: u64, keep: Option<&mut Vec<f64>>) -> f64 {
    let mut acc = LogSumExp::new();
    match keep {
        Some(buf) => {
            buf.reserve(n as usize);
            for _ in 0..n {
                let v = law.log_draw(stream);
                buf.push(v.exp());
                acc.push(v);
            }
        }
        None => {
            for _ in 0..n {
                acc.push(law.log_draw(stream));
            }
        }
    }
    acc.value()
}

pub fn generate_ensemble(spec: &EnsembleSpec) -> Result<CityEnsemble> {
    let sizes = draw_sizes(spec)?;
    let law = spec.worker_law()?;
    let total: u64 = sizes.iter().sum();
    let retain = spec.retain_workers && total <= spec.retention_cap;
    let results: Vec<(City, Option<Vec<f64>>)> = sizes
        .par_iter()
        .enumerate()
        .map(|(k, &n)| {
            let mut stream = Stream::derive(spec.seed, &[spec.replicate, k as u64]);
            let mut buf = retain.then(Vec::new);
            let log_total = city_output(&law, &mut stream, n, buf.as_mut());
            let city = City { city_id: k, size: n, total_output: log_total.exp(), log_total_output: log_total };
            (city, buf)
        })
        .collect();
    let (cities, bufs): (Vec<City>, Vec<Option<Vec<f64>>>) = results.into_iter().unzip();
    let workers = if retain { Some(bufs.into_iter().map(|b| b.unwrap_or_default()).collect()) } else { None };
    Ok(CityEnsemble { cities, workers })
}

/// Estimates from one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepEstimate {
    /// Slope of `ln Y` on `ln n`.
    pub beta_hat: f64,
    pub intercept_hat: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub sigma: f64,
    pub replicate: u64,
    pub outcome: std::result::Result<SweepEstimate, String>,
}

/// Median and 2.5 / 97.5 percentiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
}

impl Band {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    fn from_values(mut v: Vec<f64>) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self { lower: percentile(&v, 0.025), median: percentile(&v, 0.5), upper: percentile(&v, 0.975) })
    }
}

/// Linear-interpolation percentile of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub sigma: f64,
    pub succeeded: usize,
    pub failed: usize,
    pub beta: Option<Band>,
    pub intercept: Option<Band>,
    pub r2: Option<Band>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
    pub envelopes: Vec<Envelope>,
}

/// Seed of the sweep cell at `sigma`, independent of the rest of the grid.
pub fn cell_seed(base_seed: u64, sigma: f64) -> u64 {
    derive_key(base_seed, &[sigma.to_bits()])
}

fn run_cell(base: &EnsembleSpec, sigma: f64, replicate: u64) -> Result<SweepEstimate> {
    let mut spec = base.with_sigma(sigma)?;
    spec.seed = cell_seed(base.seed, sigma);
    spec.replicate = replicate;
    spec.retain_workers = false;
    let ens = generate_ensemble(&spec)?;
    let fit = ols_loglog(&ens.sizes(), &ens.totals(), ResponseMode::Total)?;
    Ok(SweepEstimate { beta_hat: fit.slope, intercept_hat: fit.intercept, r2: fit.r2 })
}

/// Replicated ensembles over a sigma grid; failing cells are recorded, not fatal.
pub fn sigma_sweep(base: &EnsembleSpec, sigmas: &[f64], replicates: usize) -> Result<SweepTable> {
    if sigmas.is_empty() {
        return Err(Error::EmptyInput("sigma grid"));
    }
    if replicates == 0 {
        return Err(Error::param("replicates", "must be at least 1"));
    }
    base.validate()?;
    let mut cells = Vec::with_capacity(sigmas.len() * replicates);
    let mut envelopes = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let start = cells.len();
        for r in 0..replicates as u64 {
            let outcome = run_cell(base, sigma, r).map_err(|e| e.to_string());
            cells.push(SweepCell { sigma, replicate: r, outcome });
        }
        let ok: Vec<SweepEstimate> = cells[start..].iter().filter_map(|c| c.outcome.as_ref().ok().copied()).collect();
        envelopes.push(Envelope {
            sigma,
            succeeded: ok.len(),
            failed: replicates - ok.len(),
            beta: Band::from_values(ok.iter().map(|e| e.beta_hat).collect()),
            intercept: Band::from_values(ok.iter().map(|e| e.intercept_hat).collect()),
            r2: Band::from_values(ok.iter().map(|e| e.r2).collect()),
        });
    }
    Ok(SweepTable { cells, envelopes })
}
