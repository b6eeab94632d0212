//! Closed-form commands: `predict-beta` and `share-of-max`.

use std::io;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use uwp_core::distributions::Lognormal;
use uwp_core::elasticity::{self, Prediction, SweepAxis};
use uwp_core::evt;

use crate::svg::{self, Chart, Mark, Series};
use crate::Ctx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Sigma,
    Fraction,
    Alpha,
}

impl Axis {
    fn core(self) -> SweepAxis {
        match self {
            Axis::Sigma => SweepAxis::Sigma,
            Axis::Fraction => SweepAxis::Fraction,
            Axis::Alpha => SweepAxis::Alpha,
        }
    }

    fn default_grid(self) -> Vec<f64> {
        match self {
            Axis::Sigma => linear_grid(0.5, 6.5, 0.1).unwrap_or_default(),
            Axis::Fraction => log_grid(1e-3, 1.0, 10),
            Axis::Alpha => linear_grid(0.5, 1.5, 0.05).unwrap_or_default(),
        }
    }
}

/// `from, from + step, ...` up to `to`, rounded to nine decimals so grid
/// points have stable bit patterns.
pub fn linear_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
        bail!("invalid grid: from {from} to {to} step {step}");
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| ((from + i as f64 * step) * 1e9).round() / 1e9).collect())
}

/// Log-spaced points from `lo` to `hi`, `per_decade` per factor of ten.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    let steps = ((b - a) * per_decade as f64).round().max(1.0) as usize;
    (0..=steps).map(|i| 10f64.powf(a + (b - a) * i as f64 / steps as f64)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaRow {
    pub n_min: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub fraction: f64,
    pub beta: Option<f64>,
    pub regime: &'static str,
}

impl BetaRow {
    pub fn from_prediction(p: &Prediction<f64>) -> Self {
        Self {
            n_min: p.n_min,
            sigma: p.sigma,
            alpha: p.alpha.unwrap_or(f64::NAN),
            fraction: p.fraction,
            beta: Some(p.beta),
            regime: p.regime.tag(),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictBetaArgs {
    /// Smallest city size.
    #[arg(long)]
    pub n_min: f64,
    /// Log-productivity standard deviation; not needed with --sweep sigma.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Pareto exponent of city sizes; not needed with --sweep alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Share of each city's population that is sampled.
    #[arg(long, default_value_t = 1.0)]
    pub fraction: f64,
    /// Vary one parameter over a grid and emit a table.
    #[arg(long, value_enum)]
    pub sweep: Option<Axis>,
    /// Explicit grid values for --sweep.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    #[arg(long, requires = "to", requires = "step")]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

impl PredictBetaArgs {
    /// Fixed value of `name`; the swept axis may be omitted.
    fn fixed(&self, value: Option<f64>, axis: Axis, name: &'static str) -> Result<f64> {
        match (value, self.sweep) {
            (Some(v), _) => Ok(v),
            (None, Some(a)) if a == axis => Ok(f64::NAN),
            (None, _) => Err(uwp_core::Error::InvalidParameter { name, reason: "required unless it is the swept parameter".into() }.into()),
        }
    }
}

pub fn beta_rows(args: &PredictBetaArgs) -> Result<Vec<BetaRow>> {
    let sigma = args.fixed(args.sigma, Axis::Sigma, "sigma")?;
    let alpha = args.fixed(args.alpha, Axis::Alpha, "alpha")?;
    let Some(axis) = args.sweep else {
        let p = elasticity::beta_ave(args.n_min, sigma, alpha, args.fraction)?;
        return Ok(vec![BetaRow::from_prediction(&p)]);
    };
    let values = if !args.values.is_empty() {
        args.values.clone()
    } else if let (Some(a), Some(b), Some(s)) = (args.from, args.to, args.step) {
        linear_grid(a, b, s)?
    } else {
        axis.default_grid()
    };
    let preds = elasticity::sweep(axis.core(), &values, args.n_min, sigma, alpha, args.fraction);
    if let Some(Err(e)) = preds.iter().find(|p| p.is_err()).filter(|_| preds.iter().all(|p| p.is_err())) {
        bail!("no valid grid point: {e}");
    }
    Ok(values
        .iter()
        .zip(preds)
        .map(|(&v, p)| match p {
            Ok(p) => BetaRow::from_prediction(&p),
            Err(_) => {
                let mut row = BetaRow {
                    n_min: args.n_min,
                    sigma,
                    alpha,
                    fraction: args.fraction,
                    beta: None,
                    regime: "invalid",
                };
                match axis {
                    Axis::Sigma => row.sigma = v,
                    Axis::Fraction => row.fraction = v,
                    Axis::Alpha => row.alpha = v,
                }
                row
            }
        })
        .collect())
}

pub fn predict_beta(args: &PredictBetaArgs, ctx: &Ctx) -> Result<()> {
    let rows = beta_rows(args)?;
    let Some(out) = &args.out else {
        let mut w = csv::Writer::from_writer(io::stdout());
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        return Ok(());
    };
    let mut run = ctx.run();
    run.write_csv(out, &rows)?;
    if let (Some(path), Some(axis)) = (&args.svg, args.sweep) {
        let x = |r: &BetaRow| match axis {
            Axis::Sigma => r.sigma,
            Axis::Fraction => r.fraction,
            Axis::Alpha => r.alpha,
        };
        let pts = rows.iter().filter_map(|r| Some((x(r), r.beta?))).collect();
        let mut chart = Chart::new("predicted elasticity", &format!("{axis:?}").to_lowercase(), "beta_ave")
            .with(Series::new("beta_ave", pts, Mark::Line));
        chart.log_x = axis == Axis::Fraction;
        run.write_text(path, &svg::render(&[chart]))?;
    }
    run.finish("predict-beta", ctx.seed, args, out)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ShareRow {
    pub sigma: f64,
    pub n: u64,
    pub share: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ShareOfMaxArgs {
    /// One or more sigmas, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigma: Vec<f64>,
    /// Group size; with --grid, the largest size on a log grid from 10.
    #[arg(long)]
    pub n: f64,
    #[arg(long)]
    pub grid: bool,
    #[arg(long, default_value_t = 4)]
    pub per_decade: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

pub fn share_rows(sigmas: &[f64], sizes: &[u64]) -> Result<Vec<ShareRow>> {
    let mut rows = Vec::with_capacity(sigmas.len() * sizes.len());
    for &sigma in sigmas {
        let spec = Lognormal::unit_mean(sigma)?;
        for &n in sizes {
            rows.push(ShareRow { sigma, n, share: evt::max_share_proxy(&spec, n as usize)? });
        }
    }
    Ok(rows)
}

pub fn size_grid(n_max: f64, per_decade: usize) -> Vec<u64> {
    let mut sizes: Vec<u64> = log_grid(10.0, n_max, per_decade.max(1)).iter().map(|n| n.round() as u64).collect();
    sizes.dedup();
    sizes
}

pub fn share_chart(rows: &[ShareRow]) -> Chart {
    let mut chart = Chart::new("share of the largest term", "n", "max / sum").log_x();
    let mut sigmas: Vec<f64> = rows.iter().map(|r| r.sigma).collect();
    sigmas.dedup();
    for s in sigmas {
        let pts = rows.iter().filter(|r| r.sigma == s).map(|r| (r.n as f64, r.share)).collect();
        chart.series.push(Series::new(format!("sigma = {s}"), pts, Mark::Line));
    }
    chart
}

pub fn share_of_max(args: &ShareOfMaxArgs, ctx: &Ctx) -> Result<()> {
    if !(args.n >= 2.0) || args.n.fract() != 0.0 {
        bail!("--n must be an integer of at least 2, got {}", args.n);
    }
    let sizes = if args.grid { size_grid(args.n, args.per_decade) } else { vec![args.n as u64] };
    let rows = share_rows(&args.sigma, &sizes)?;
    let Some(out) = &args.out else {
        let mut w = csv::Writer::from_writer(io::stdout());
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        return Ok(());
    };
    let mut run = ctx.run();
    run.write_csv(out, &rows)?;
    if let Some(path) = &args.svg {
        run.write_text(path, &svg::render(&[share_chart(&rows)]))?;
    }
    run.finish("share-of-max", ctx.seed, args, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = linear_grid(1.5, 6.5, 0.25).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[4], 2.5);
        assert_eq!(*g.last().unwrap(), 6.5);
        assert!(linear_grid(1.0, 0.0, 0.1).is_err());
        let l = log_grid(1e-3, 1.0, 1);
        assert_eq!(l.len(), 4);
        assert!((l[1] - 1e-2).abs() < 1e-15);
        let s = size_grid(1e3, 1);
        assert_eq!(s, vec![10, 100, 1000]);
    }

    #[test]
    fn invalid_sweep_points_are_marked() {
        let args = PredictBetaArgs {
            n_min: 1e4,
            sigma: None,
            alpha: Some(1.0),
            fraction: 1.0,
            sweep: Some(Axis::Sigma),
            values: vec![-1.0, 2.0],
            from: None,
            to: None,
            step: None,
            out: None,
            svg: None,
        };
        let rows = beta_rows(&args).unwrap();
        assert_eq!(rows[0].regime, "invalid");
        assert!(rows[0].beta.is_none());
        assert!(rows[1].beta.is_some());
        assert_eq!(rows[0].sigma, -1.0);

        let fixed = PredictBetaArgs { sweep: None, values: Vec::new(), ..args };
        assert!(beta_rows(&fixed).is_err());
    }
}
