//! Power-law tail estimation by KS-minimizing lower bound.

use crate::error::{Error, Result};

const MAX_CANDIDATES: usize = 10_000;
const MIN_TAIL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoFit {
    pub alpha_hat: f64,
    pub n_min_hat: f64,
    pub ks_distance: f64,
    /// Observations at or above `n_min_hat`.
    pub n_tail: usize,
}

/// KS distance between the empirical and fitted CDF of a sorted tail.
fn ks_tail(logs: &[f64], ln_xm: f64, alpha: f64) -> f64 {
    let n = logs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < logs.len() {
        // step over ties so the empirical CDF jumps once per distinct value
        let mut j = i + 1;
        while j < logs.len() && logs[j] == logs[i] {
            j += 1;
        }
        let model = -(-alpha * (logs[i] - ln_xm)).exp_m1();
        d = d.max((model - i as f64 / n).abs()).max((j as f64 / n - model).abs());
        i = j;
    }
    d
}

/// Choose `n_min` minimizing the KS distance of the tail to its MLE power law.
///
/// Candidates are the distinct observed values with at least 10 points at
/// or above them, evenly thinned to at most 10^4.
pub fn estimate_pareto_tail(data: &[f64]) -> Result<ParetoFit> {
    if data.len() < 50 {
        return Err(Error::param("data", format!("{} observations; need at least 50", data.len())));
    }
    if data.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::param("data", "values must be positive and finite"));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let logs: Vec<f64> = sorted.iter().map(|x| x.ln()).collect();
    let n = logs.len();
    // suffix sums of ln x
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + logs[i];
    }

    let mut starts: Vec<usize> = Vec::new();
    for i in 0..n {
        if n - i < MIN_TAIL {
            break;
        }
        if i == 0 || sorted[i] != sorted[i - 1] {
            starts.push(i);
        }
    }
    if starts.is_empty() {
        return Err(Error::Degenerate("no candidate lower bound leaves 10 tail points".into()));
    }
    if starts.len() > MAX_CANDIDATES {
        let step = starts.len() as f64 / MAX_CANDIDATES as f64;
        starts = (0..MAX_CANDIDATES).map(|k| starts[(k as f64 * step) as usize]).collect();
    }

    let mut best: Option<ParetoFit> = None;
    for &i in &starts {
        let m = (n - i) as f64;
        let ln_xm = logs[i];
        let s = suffix[i] - m * ln_xm;
        if !(s > 0.0) {
            continue;
        }
        let alpha = m / s;
        let d = ks_tail(&logs[i..], ln_xm, alpha);
        if best.is_none_or(|b| d < b.ks_distance) {
            best = Some(ParetoFit { alpha_hat: alpha, n_min_hat: sorted[i], ks_distance: d, n_tail: n - i });
        }
    }
    best.ok_or_else(|| Error::Degenerate("every candidate tail is constant".into()))
}
