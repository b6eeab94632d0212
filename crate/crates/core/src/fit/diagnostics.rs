//! Q-Q, P-P and CCDF data for judging a fit.

use crate::distributions::FitFamily;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// `(model quantile at (i - 0.5) / n, i-th order statistic)`.
    pub qq: Vec<(f64, f64)>,
    /// `(model CDF at i-th order statistic, (i - 0.5) / n)`.
    pub pp: Vec<(f64, f64)>,
    pub ccdf: Vec<CcdfPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcdfPoint {
    pub x: f64,
    /// Share of observations `>= x`.
    pub empirical: f64,
    pub model: f64,
}

impl Diagnostics {
    pub fn max_pp_deviation(&self) -> f64 {
        self.pp.iter().map(|(m, e)| (m - e).abs()).fold(0.0, f64::max)
    }
}

pub fn diagnostic_data(family: &FitFamily, data: &[f64], grid_points: usize) -> Result<Diagnostics> {
    if data.is_empty() {
        return Err(Error::EmptyInput("data"));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut qq = Vec::with_capacity(sorted.len());
    let mut pp = Vec::with_capacity(sorted.len());
    for (i, &x) in sorted.iter().enumerate() {
        let p = (i as f64 + 0.5) / n;
        qq.push((family.quantile(p)?, x));
        pp.push((family.cdf(x).clamp(0.0, 1.0), p));
    }

    let mut ccdf = Vec::new();
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo > 0.0 && hi > lo && grid_points >= 2 {
        let (l0, l1) = (lo.ln(), hi.ln());
        for k in 0..grid_points {
            let x = (l0 + (l1 - l0) * k as f64 / (grid_points - 1) as f64).exp().min(hi);
            let below = sorted.partition_point(|&v| v < x);
            let empirical = (sorted.len() - below) as f64 / n;
            if empirical > 0.0 {
                ccdf.push(CcdfPoint { x, empirical, model: family.sf(x) });
            }
        }
    }
    Ok(Diagnostics { qq, pp, ccdf })
}
