//! Maximum-likelihood fits with bootstrap intervals.

use rayon::prelude::*;

use crate::distributions::{FamilyKind, FitFamily};
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::simulate::percentile;

use super::optimize::{nelder_mead, SimplexOptions};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub fn aic(loglik: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * loglik
}

pub fn bic(loglik: f64, k: usize, n_obs: usize) -> f64 {
    k as f64 * (n_obs as f64).ln() - 2.0 * loglik
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Lower truncation bound; defaults to the data minimum for families that need one.
    pub truncation: Option<f64>,
    /// Keep a single copy of values equal to the truncation bound.
    pub dedupe: bool,
    pub bootstrap: usize,
    /// Central coverage of the percentile intervals.
    pub confidence: f64,
    /// Number of simplex starts, the first from moment estimates.
    pub restarts: usize,
    pub tol: f64,
    pub max_evaluations: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            truncation: None,
            dedupe: false,
            bootstrap: 499,
            confidence: 0.95,
            restarts: 5,
            tol: 1e-9,
            max_evaluations: 4000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedDistribution {
    pub family: FitFamily,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_obs: usize,
    /// Percentile bootstrap interval per parameter; empty without bootstrap.
    pub param_cis: Vec<(f64, f64)>,
    /// Bootstrap standard error per parameter; empty without bootstrap.
    pub param_ses: Vec<f64>,
    pub truncation_bound: Option<f64>,
    /// Set when the optimizer ran out of evaluations.
    pub unreliable: bool,
    pub bootstrap_resamples: usize,
}

impl FittedDistribution {
    pub fn kind(&self) -> FamilyKind {
        self.family.kind()
    }

    pub fn params(&self) -> &[f64] {
        self.family.params()
    }

    pub fn k(&self) -> usize {
        self.family.kind().arity()
    }
}

/// Remove repeated copies of `bound`, keeping one.
pub fn dedupe_at_bound(data: &[f64], bound: f64) -> Vec<f64> {
    let mut seen = false;
    data.iter()
        .copied()
        .filter(|&x| {
            if x == bound {
                let keep = !seen;
                seen = true;
                keep
            } else {
                true
            }
        })
        .collect()
}

/// Map from optimizer coordinates to a parameter.
#[derive(Debug, Clone, Copy)]
enum Coord {
    Positive { reference: f64 },
    Real { center: f64, unit: f64 },
}

impl Coord {
    fn to_param(self, t: f64) -> f64 {
        match self {
            Coord::Positive { reference } => reference * t.exp(),
            Coord::Real { center, unit } => center + unit * t,
        }
    }

    fn from_param(self, p: f64) -> f64 {
        match self {
            Coord::Positive { reference } => (p / reference).ln(),
            Coord::Real { center, unit } => (p - center) / unit,
        }
    }
}

struct Moments {
    mean: f64,
    sd: f64,
    log_mean: f64,
    log_sd: f64,
    median: f64,
    iqr: f64,
}

fn moments(data: &[f64]) -> Moments {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let sd = (data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let logs: Vec<f64> = data.iter().filter(|&&x| x > 0.0).map(|x| x.ln()).collect();
    let (log_mean, log_sd) = if logs.len() >= 2 {
        let m = logs.iter().sum::<f64>() / logs.len() as f64;
        (m, (logs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / logs.len() as f64).sqrt())
    } else {
        (0.0, 1.0)
    };
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = percentile(&sorted, 0.5);
    let iqr = percentile(&sorted, 0.75) - percentile(&sorted, 0.25);
    Moments { mean, sd, log_mean, log_sd, median, iqr }
}

fn pos(v: f64, fallback: f64) -> f64 {
    if v.is_finite() && v > 0.0 {
        v
    } else {
        fallback
    }
}

/// Moment-based starting point, expressed as coordinate maps centred on it.
fn coords(kind: FamilyKind, m: &Moments) -> Vec<Coord> {
    let sd = pos(m.sd, 1.0);
    let log_sd = pos(m.log_sd, 0.5);
    match kind {
        FamilyKind::Lognormal | FamilyKind::TruncLognormal => vec![
            Coord::Real { center: m.log_mean, unit: log_sd },
            Coord::Positive { reference: log_sd },
        ],
        FamilyKind::Normal => vec![Coord::Real { center: m.mean, unit: sd }, Coord::Positive { reference: sd }],
        FamilyKind::Weibull | FamilyKind::TruncWeibull => {
            let shape = pos(1.2825 / log_sd, 1.0);
            let scale = pos((m.log_mean + EULER_GAMMA / shape).exp(), pos(m.mean, 1.0));
            vec![Coord::Positive { reference: shape }, Coord::Positive { reference: scale }]
        }
        FamilyKind::Gamma | FamilyKind::TruncGamma => {
            let mean = pos(m.mean, 1.0);
            let var = sd * sd;
            vec![Coord::Positive { reference: pos(mean * mean / var, 1.0) }, Coord::Positive { reference: pos(mean / var, 1.0) }]
        }
        FamilyKind::Gumbel | FamilyKind::TruncGumbel => {
            let b = sd * 6f64.sqrt() / std::f64::consts::PI;
            vec![Coord::Real { center: m.mean - EULER_GAMMA * b, unit: b }, Coord::Positive { reference: b }]
        }
        FamilyKind::TruncCauchy => {
            let s = pos(m.iqr / 2.0, sd);
            vec![Coord::Real { center: m.median, unit: s }, Coord::Positive { reference: s }]
        }
        FamilyKind::Logistic | FamilyKind::TruncLogistic => {
            let s = sd * 3f64.sqrt() / std::f64::consts::PI;
            vec![Coord::Real { center: m.mean, unit: s }, Coord::Positive { reference: s }]
        }
        FamilyKind::Pareto => vec![Coord::Positive { reference: 1.0 }],
    }
}

/// Closed-form MLE where one exists.
fn closed_form(kind: FamilyKind, data: &[f64], bound: Option<f64>) -> Option<Vec<f64>> {
    let n = data.len() as f64;
    match kind {
        FamilyKind::Normal => {
            let mean = data.iter().sum::<f64>() / n;
            let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            Some(vec![mean, var.sqrt()])
        }
        FamilyKind::Pareto => {
            let xm = bound?;
            let s: f64 = data.iter().map(|x| (x / xm).ln()).sum();
            Some(vec![n / s])
        }
        FamilyKind::Lognormal => {
            let logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
            let mean = logs.iter().sum::<f64>() / n;
            let var = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            Some(vec![mean, var.sqrt()])
        }
        _ => None,
    }
}

struct Estimate {
    params: Vec<f64>,
    loglik: f64,
    converged: bool,
}

fn negloglik(kind: FamilyKind, coords: &[Coord], bound: Option<f64>, data: &[f64], t: &[f64]) -> f64 {
    let params: Vec<f64> = coords.iter().zip(t).map(|(c, &v)| c.to_param(v)).collect();
    match FitFamily::new(kind, params, bound) {
        Ok(fam) => -fam.log_likelihood(data),
        Err(_) => f64::INFINITY,
    }
}

fn optimize(
    kind: FamilyKind,
    coords: &[Coord],
    bound: Option<f64>,
    data: &[f64],
    starts: &[Vec<f64>],
    opts: &FitOptions,
) -> Result<Estimate> {
    let simplex = SimplexOptions { tol: opts.tol, max_evaluations: opts.max_evaluations, ..Default::default() };
    let objective = |t: &[f64]| negloglik(kind, coords, bound, data, t);
    let mut best: Option<crate::fit::optimize::Minimum> = None;
    for start in starts {
        let first = nelder_mead(objective, start, &simplex);
        // restart from the end point with a fresh simplex
        let polish_opts = SimplexOptions { step: 0.1, ..simplex };
        let second = nelder_mead(objective, &first.x, &polish_opts);
        let run = if second.value <= first.value { second } else { first };
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.ok_or(Error::EmptyInput("starting points"))?;
    if !best.value.is_finite() {
        return Err(Error::NonConvergence { evaluations: best.evaluations });
    }
    Ok(Estimate {
        params: coords.iter().zip(&best.x).map(|(c, &v)| c.to_param(v)).collect(),
        loglik: -best.value,
        converged: best.converged,
    })
}

fn estimate(kind: FamilyKind, data: &[f64], bound: Option<f64>, coords: &[Coord], starts: &[Vec<f64>], opts: &FitOptions) -> Result<Estimate> {
    if let Some(params) = closed_form(kind, data, bound) {
        let fam = FitFamily::new(kind, params.clone(), bound)?;
        return Ok(Estimate { loglik: fam.log_likelihood(data), params, converged: true });
    }
    optimize(kind, coords, bound, data, starts, opts)
}

/// Maximum-likelihood fit of `kind` to `data`.
pub fn fit_family(data: &[f64], kind: FamilyKind, opts: &FitOptions) -> Result<FittedDistribution> {
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("data", "non-finite value"));
    }
    if let Some(t) = opts.truncation {
        if let Some(&x) = data.iter().find(|&&x| x < t) {
            return Err(Error::param("data", format!("value {x} below truncation bound {t}")));
        }
    }
    let bound = if kind.needs_bound() {
        Some(opts.truncation.unwrap_or_else(|| data.iter().copied().fold(f64::INFINITY, f64::min)))
    } else {
        None
    };
    let owned;
    let data = match (opts.dedupe, bound.or(opts.truncation)) {
        (true, Some(b)) => {
            owned = dedupe_at_bound(data, b);
            &owned[..]
        }
        _ => data,
    };
    if data.len() < 10 {
        return Err(Error::param("data", format!("{} observations; need at least 10", data.len())));
    }
    if kind.positive_support() && data.iter().any(|&x| x <= 0.0) {
        return Err(Error::param("data", format!("{kind} needs positive data")));
    }
    if kind == FamilyKind::Pareto && bound.is_some_and(|b| b <= 0.0) {
        return Err(Error::param("bound", "powerlaw bound must be positive"));
    }

    let m = moments(data);
    let coords = coords(kind, &m);
    let dim = coords.len();
    let mut starts = vec![vec![0.0; dim]];
    let mut stream = Stream::derive(opts.seed, &[kind as u64, u64::MAX]);
    for _ in 1..opts.restarts.max(1) {
        starts.push((0..dim).map(|_| stream.standard_normal()).collect());
    }
    let est = estimate(kind, data, bound, &coords, &starts, opts)?;
    let family = FitFamily::new(kind, est.params.clone(), bound)?;
    let k = kind.arity();
    let n_obs = data.len();

    let (param_cis, param_ses) = if opts.bootstrap > 0 {
        bootstrap(kind, data, bound, &coords, &est.params, opts)?
    } else {
        (Vec::new(), Vec::new())
    };

    Ok(FittedDistribution {
        family,
        loglik: est.loglik,
        aic: aic(est.loglik, k),
        bic: bic(est.loglik, k, n_obs),
        n_obs,
        param_cis,
        param_ses,
        truncation_bound: bound,
        unreliable: !est.converged,
        bootstrap_resamples: opts.bootstrap,
    })
}

type Intervals = (Vec<(f64, f64)>, Vec<f64>);

fn bootstrap(kind: FamilyKind, data: &[f64], bound: Option<f64>, coords: &[Coord], mle: &[f64], opts: &FitOptions) -> Result<Intervals> {
    let warm: Vec<f64> = coords.iter().zip(mle).map(|(c, &p)| c.from_param(p)).collect();
    let inner = FitOptions { restarts: 1, ..opts.clone() };
    let n = data.len();
    let draws: Vec<Vec<f64>> = (0..opts.bootstrap)
        .into_par_iter()
        .filter_map(|b| {
            let mut s = Stream::derive(opts.seed, &[kind as u64, b as u64]);
            let resample: Vec<f64> = (0..n).map(|_| data[s.below(n as u64) as usize]).collect();
            estimate(kind, &resample, bound, coords, std::slice::from_ref(&warm), &inner).ok().map(|e| e.params)
        })
        .collect();
    if draws.len() < 2 {
        return Err(Error::Degenerate("bootstrap produced fewer than two estimates".into()));
    }
    let tail = (1.0 - opts.confidence) / 2.0;
    let mut cis = Vec::with_capacity(mle.len());
    let mut ses = Vec::with_capacity(mle.len());
    for i in 0..mle.len() {
        let mut v: Vec<f64> = draws.iter().map(|d| d[i]).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        ses.push((v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt());
        v.sort_by(f64::total_cmp);
        cis.push((percentile(&v, tail), percentile(&v, 1.0 - tail)));
    }
    Ok((cis, ses))
}

/// Sort fits of the same data by AIC, then BIC.
pub fn rank_models(fits: &[FittedDistribution]) -> Result<Vec<FittedDistribution>> {
    if let Some(first) = fits.first() {
        if let Some(other) = fits.iter().find(|f| f.n_obs != first.n_obs) {
            return Err(Error::LengthMismatch { left: first.n_obs, right: other.n_obs });
        }
    }
    let mut out = fits.to_vec();
    out.sort_by(|a, b| a.aic.total_cmp(&b.aic).then(a.bic.total_cmp(&b.bic)));
    Ok(out)
}

/// One line of a model-comparison table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ModelRow {
    pub dist: String,
    pub numobs: usize,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub params: String,
    pub cis: String,
}

impl From<&FittedDistribution> for ModelRow {
    fn from(f: &FittedDistribution) -> Self {
        let names = f.kind().param_names();
        let params = names
            .iter()
            .zip(f.params())
            .map(|(n, v)| format!("{n}={v:.6}"))
            .collect::<Vec<_>>()
            .join("; ");
        let cis = names
            .iter()
            .zip(&f.param_cis)
            .map(|(n, (lo, hi))| format!("{n}=[{lo:.6}, {hi:.6}]"))
            .collect::<Vec<_>>()
            .join("; ");
        Self { dist: f.kind().tag().into(), numobs: f.n_obs, loglik: f.loglik, aic: f.aic, bic: f.bic, params, cis }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn information_criteria_arithmetic() {
        let a = aic(-4733.51, 1);
        assert!((a - 9469.02).abs() < 1e-9);
        assert_eq!(format!("{a:.2}"), "9469.02");
        assert!((aic(-4733.02, 2) - 9470.04).abs() < 1e-9);
        let b = bic(-4733.02, 2, 553);
        let oracle = 2.0 * 6.315_358_001_522_335 + 9466.04;
        assert!((b - oracle).abs() < 1e-9, "{b}");
        assert!((b - 9478.68).abs() < 0.02);
    }

    #[test]
    fn dedupe_keeps_one_copy() {
        let v = dedupe_at_bound(&[5.0, 5.0, 6.0, 5.0, 7.0], 5.0);
        assert_eq!(v, vec![5.0, 6.0, 7.0]);
    }

    #[test]
    fn coordinates_round_trip() {
        let c = Coord::Positive { reference: 3.0 };
        assert!((c.to_param(c.from_param(7.5)) - 7.5).abs() < 1e-12);
        let r = Coord::Real { center: -2.0, unit: 0.5 };
        assert!((r.to_param(r.from_param(1.25)) - 1.25).abs() < 1e-12);
    }

    fn sample(kind: FamilyKind, params: Vec<f64>, bound: Option<f64>, n: usize, seed: u64) -> Vec<f64> {
        FitFamily::new(kind, params, bound).unwrap().sample(&mut Stream::new(seed), n).unwrap()
    }

    #[test]
    fn pareto_closed_form() {
        let data = sample(FamilyKind::Pareto, vec![0.67], Some(287.0), 100_000, 1);
        let opts = FitOptions { truncation: Some(287.0), bootstrap: 0, ..Default::default() };
        let f = fit_family(&data, FamilyKind::Pareto, &opts).unwrap();
        assert!((0.61..=0.72).contains(&f.params()[0]));
        assert_eq!(f.truncation_bound, Some(287.0));
    }

    #[test]
    fn optimizer_matches_closed_form_lognormal() {
        let data = sample(FamilyKind::Lognormal, vec![1.0, 0.8], None, 5000, 2);
        let closed = fit_family(&data, FamilyKind::Lognormal, &FitOptions { bootstrap: 0, ..Default::default() }).unwrap();
        let coords = coords(FamilyKind::Lognormal, &moments(&data));
        let est = optimize(FamilyKind::Lognormal, &coords, None, &data, &[vec![0.3, -0.2]], &FitOptions::default()).unwrap();
        assert!((est.loglik - closed.loglik).abs() < 1e-6);
        assert!((est.params[1] - closed.params()[1]).abs() < 1e-4);
    }

    #[test]
    fn weibull_recovery_with_bootstrap() {
        let data = sample(FamilyKind::Weibull, vec![1.7, 40.0], None, 4000, 3);
        let opts = FitOptions { bootstrap: 40, ..Default::default() };
        let f = fit_family(&data, FamilyKind::Weibull, &opts).unwrap();
        assert!(!f.unreliable);
        for (i, &truth) in [1.7, 40.0].iter().enumerate() {
            assert!((f.params()[i] - truth).abs() < 4.0 * f.param_ses[i], "{i}: {:?} {:?}", f.params(), f.param_ses);
            assert!(f.param_cis[i].0 < f.param_cis[i].1);
        }
    }

    #[test]
    fn preconditions() {
        let small = vec![1.0; 5];
        assert!(fit_family(&small, FamilyKind::Normal, &FitOptions::default()).is_err());
        let data: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let opts = FitOptions { truncation: Some(10.0), bootstrap: 0, ..Default::default() };
        assert!(fit_family(&data, FamilyKind::TruncLognormal, &opts).is_err());
        let neg: Vec<f64> = (0..50).map(|i| i as f64 - 10.0).collect();
        assert!(fit_family(&neg, FamilyKind::Gamma, &FitOptions { bootstrap: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn ranking_orders_and_checks_n() {
        let data = sample(FamilyKind::Lognormal, vec![0.0, 1.5], None, 2000, 5);
        let opts = FitOptions { bootstrap: 0, ..Default::default() };
        let fits: Vec<_> = [FamilyKind::Normal, FamilyKind::Lognormal, FamilyKind::Gamma]
            .iter()
            .map(|&k| fit_family(&data, k, &opts).unwrap())
            .collect();
        let ranked = rank_models(&fits).unwrap();
        assert_eq!(ranked[0].kind(), FamilyKind::Lognormal);
        assert_eq!(ranked[2].kind(), FamilyKind::Normal);
        assert_eq!(rank_models(&fits[..1]).unwrap().len(), 1);
        let other = fit_family(&data[..100], FamilyKind::Normal, &opts).unwrap();
        assert!(rank_models(&[fits[0].clone(), other]).is_err());
        let row = ModelRow::from(&ranked[0]);
        assert_eq!(row.dist, "lnorm");
        assert!(row.params.contains("sigma="));
    }
}
