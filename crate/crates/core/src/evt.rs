//! Extreme-value analytics for lognormal samples.
//!
//! With `X_i = exp(log_scale + sigma * Z_i)`, the total `Y(n)` factors as
//! `M(n) * Delta_n`, where `M(n) = exp(log_scale + sigma * L(n))` is the
//! largest term, `L(n)` the largest standard normal, and
//! `Delta_n = sum_i exp(sigma * (Z_i - L(n))) >= 1`. When `Delta_n` stays of
//! order one, `Y(n)` scales like the centering sequence
//! `d_n = exp(log_scale + sigma * sqrt(2 ln n))`.

use rayon::prelude::*;

use crate::distributions::special::normal_quantile;
use crate::distributions::{Lognormal, LogSumExp};
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::scalar::Scalar;

/// Decomposition of one realized lognormal sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary<F> {
    pub n: usize,
    /// `M(n)`, the largest productivity.
    pub max_value: F,
    /// `L(n)`, the largest standard normal.
    pub max_log_z: F,
    /// `L_2(n)`; `-inf` for a single draw.
    pub second_log_z: F,
    pub delta_n: F,
    pub d_n: F,
    pub c_n: F,
}

/// Summarize a sample given by its standard-normal scores.
pub fn summarize<F: Scalar>(spec: &Lognormal<F>, z_values: &[F]) -> Result<Summary<F>> {
    if z_values.is_empty() {
        return Err(Error::EmptyInput("z_values"));
    }
    let mut first = F::neg_infinity();
    let mut second = F::neg_infinity();
    for &z in z_values {
        if z > first {
            second = first;
            first = z;
        } else if z > second {
            second = z;
        }
    }
    let n = z_values.len();
    let sigma = spec.sigma();
    let (d_n, c_n) = if n >= 2 {
        let (_, b_n) = gumbel_centering::<F>(n)?;
        let d = centering(spec, F::from_usize_lossy(n));
        (d, sigma * b_n * d)
    } else {
        (spec.median(), F::zero())
    };
    Ok(Summary {
        n,
        max_value: spec.from_standard_normal(first),
        max_log_z: first,
        second_log_z: second,
        delta_n: delta_n(z_values, sigma)?,
        d_n,
        c_n,
    })
}

/// `d_n = exp(log_scale + sigma * sqrt(2 ln n))`; reduces to
/// `exp(-sigma^2/2 + sigma sqrt(2 ln n))` for the unit-mean law.
pub fn centering<F: Scalar>(spec: &Lognormal<F>, n: F) -> F {
    (spec.log_scale() + spec.sigma() * (F::lit(2.0) * n.ln()).sqrt()).exp()
}

/// `Delta_n = sum_i exp(sigma * (z_i - max z))`.
pub fn delta_n<F: Scalar>(z_values: &[F], sigma: F) -> Result<F> {
    if z_values.is_empty() {
        return Err(Error::EmptyInput("z_values"));
    }
    let max = z_values.iter().copied().fold(F::neg_infinity(), F::max);
    Ok(z_values.iter().map(|&z| (sigma * (z - max)).exp()).sum())
}

/// Gumbel normalizing constants for the maximum of `n` standard normals:
/// `(L(n) - a_n) / b_n` converges to the standard Gumbel law.
pub fn gumbel_centering<F: Scalar>(n: usize) -> Result<(F, F)> {
    if n < 2 {
        return Err(Error::param("n", format!("{n} < 2")));
    }
    let ln_n = F::from_usize_lossy(n).ln();
    let two = F::lit(2.0);
    let root = (two * ln_n).sqrt();
    let a_n = root - (ln_n.ln() + (F::lit(4.0) * F::PI()).ln()) / (F::lit(8.0) * ln_n).sqrt();
    Ok((a_n, root.recip()))
}

/// Standard Gumbel CDF `exp(-exp(-x))`.
pub fn gumbel_cdf<F: Scalar>(x: F) -> F {
    (-(-x).exp()).exp()
}

/// Size `e^{sigma^2/2}` at which the law of large numbers takes over.
pub fn lln_threshold<F: Scalar>(sigma: F) -> Result<F> {
    if !(sigma > F::zero()) {
        return Err(Error::param("sigma", format!("{sigma} must be positive")));
    }
    Ok((sigma * sigma / F::lit(2.0)).exp())
}

/// Variance `e^{sigma^2} - 1` of the unit-mean lognormal.
pub fn unit_mean_variance<F: Scalar>(sigma: F) -> Result<F> {
    if !(sigma > F::zero()) {
        return Err(Error::param("sigma", format!("{sigma} must be positive")));
    }
    Ok((sigma * sigma).exp_m1())
}

/// Share of the largest of `n` midpoint-grid quantiles in their sum:
/// `Q(1 - 1/(2n)) / sum_{i=1..n} Q((i - 1/2)/n)`. A deterministic proxy for
/// `M(n) / Y(n)`.
pub fn max_share_proxy<F: Scalar>(spec: &Lognormal<F>, n: usize) -> Result<F> {
    if n < 2 {
        return Err(Error::param("n", format!("{n} < 2")));
    }
    let nf = F::from_usize_lossy(n);
    let half = F::lit(0.5);
    // sum in log space relative to the top quantile
    let z_top = normal_quantile(F::one() - half / nf)?;
    let sigma = spec.sigma();
    let mut acc = LogSumExp::new();
    for i in 0..n {
        let p = (F::from_usize_lossy(i) + half) / nf;
        let z = normal_quantile(p)?;
        acc.push(sigma * (z - z_top));
    }
    Ok((-acc.value()).exp())
}

/// Outcome of the single-event versus many-event comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjunctionComparison<F> {
    /// `ln(n2 * S(xbar1 + n2 * eps))`.
    pub ln_disjunction: F,
    /// `n2 * ln S(xbar1 + eps)`; `-inf` when the survival underflows to 0.
    pub ln_conjunction: F,
    pub disjunction_wins: bool,
    pub degenerate: bool,
}

impl<F: Scalar> ConjunctionComparison<F> {
    /// Disjunction likelihood capped at 1 for reporting.
    pub fn disjunction(&self) -> F {
        self.ln_disjunction.exp().min(F::one())
    }

    pub fn conjunction(&self) -> F {
        self.ln_conjunction.exp()
    }
}

/// Compare one worker exceeding `xbar1 + n2*eps` (disjunction, union bound
/// `n2 * S(.)`) with all `n2` workers exceeding `xbar1 + eps` (conjunction).
pub fn compare_conjunction_disjunction<F: Scalar>(
    spec: &Lognormal<F>,
    xbar1: F,
    epsilon: F,
    n2: usize,
) -> Result<ConjunctionComparison<F>> {
    if !(xbar1.is_finite() && xbar1 > F::zero()) {
        return Err(Error::param("xbar1", format!("{xbar1} must be positive and finite")));
    }
    if !(epsilon.is_finite() && epsilon > F::zero()) {
        return Err(Error::param("epsilon", format!("{epsilon} must be positive and finite")));
    }
    if n2 < 2 {
        return Err(Error::param("n2", format!("{n2} < 2")));
    }
    let n = F::from_usize_lossy(n2);
    let ln_s_single = spec.ln_survival(xbar1 + epsilon)?;
    let ln_s_shifted = spec.ln_survival(xbar1 + n * epsilon)?;
    let ln_disjunction = n.ln() + ln_s_shifted;
    let degenerate = ln_s_single == F::neg_infinity();
    let ln_conjunction = if degenerate { F::neg_infinity() } else { n * ln_s_single };
    Ok(ConjunctionComparison {
        ln_disjunction,
        ln_conjunction,
        disjunction_wins: ln_disjunction > ln_conjunction,
        degenerate,
    })
}

/// Maxima of `n` standard normals, one per replicate, each from its own
/// sub-stream of `seed`.
pub fn normal_maxima(n: usize, replicates: usize, seed: u64) -> Vec<f64> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut s = Stream::derive(seed, &[r as u64]);
            (0..n).map(|_| s.standard_normal()).fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Monte Carlo `Delta_n` over replicates of `n` standard normals.
pub fn delta_n_replicates(n: usize, sigma: f64, replicates: usize, seed: u64) -> Vec<f64> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut s = Stream::derive(seed, &[r as u64]);
            let mut acc = LogSumExp::new();
            for _ in 0..n {
                acc.push(sigma * s.standard_normal());
            }
            acc.ratio_to_max()
        })
        .collect()
}

/// Monte Carlo estimate of `P(max > t) / P(sum > t)` for `n` i.i.d. draws,
/// with `t` the empirical `level` quantile of the sum.
pub fn single_big_jump_ratio(spec: &Lognormal<f64>, n: usize, level: f64, replicates: usize, seed: u64) -> Result<f64> {
    if n < 2 || replicates < 10 || !(level > 0.0 && level < 1.0) {
        return Err(Error::param("single_big_jump_ratio", "need n >= 2, replicates >= 10 and level in (0, 1)"));
    }
    let pairs: Vec<(f64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut s = Stream::derive(seed, &[r as u64]);
            let mut max = f64::NEG_INFINITY;
            let mut sum = 0.0;
            for _ in 0..n {
                let x = spec.from_standard_normal(s.standard_normal());
                max = max.max(x);
                sum += x;
            }
            (max, sum)
        })
        .collect();
    let mut sums: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    sums.sort_unstable_by(f64::total_cmp);
    let t = sums[((level * replicates as f64) as usize).min(replicates - 1)];
    let over_sum = pairs.iter().filter(|p| p.1 > t).count();
    let over_max = pairs.iter().filter(|p| p.0 > t).count();
    if over_sum == 0 {
        return Err(Error::Degenerate("no sum exceeds the threshold".into()));
    }
    Ok(over_max as f64 / over_sum as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_n_edge_cases() {
        assert_eq!(delta_n(&[0.3f64], 5.0).unwrap(), 1.0);
        assert_eq!(delta_n(&[0.0f64, 0.0], 3.7).unwrap(), 2.0);
        assert!(delta_n::<f64>(&[], 1.0).is_err());
        let z = [1.0f64, -2.0, 0.5, 0.9];
        assert!(delta_n(&z, 2.0).unwrap() >= 1.0);
    }

    #[test]
    fn summary_invariants() {
        let spec = Lognormal::unit_mean(4.0f64).unwrap();
        let mut s = Stream::new(3);
        let z: Vec<f64> = (0..1000).map(|_| s.standard_normal()).collect();
        let sum = summarize(&spec, &z).unwrap();
        assert!(sum.delta_n >= 1.0);
        assert!(sum.max_log_z >= sum.second_log_z);
        let expected_d = (-8.0 + 4.0 * (2.0 * 1000f64.ln()).sqrt()).exp();
        assert!((sum.d_n / expected_d - 1.0).abs() < 1e-12);
        // Y(n) = M(n) * Delta_n
        let y: f64 = z.iter().map(|&v| spec.from_standard_normal(v)).sum();
        assert!((sum.max_value * sum.delta_n / y - 1.0).abs() < 1e-12);
        let one = summarize(&spec, &[0.2]).unwrap();
        assert_eq!(one.delta_n, 1.0);
        assert_eq!(one.second_log_z, f64::NEG_INFINITY);
    }

    #[test]
    fn delta_n_near_critical_regime() {
        // sigma = 6 exceeds sqrt(2 ln 1e4) = 4.29. Conditioning on the maximum
        // l, E[Delta_n] = 1 + (n - 1) E[exp(s^2/2 - s l) Phi(l - s) / Phi(l)];
        // 30-digit quadrature of that integral gives the oracle.
        let oracle = 2.424_029_632_861;
        let reps = delta_n_replicates(10_000, 6.0, 400, 17);
        let n = reps.len() as f64;
        let mean = reps.iter().sum::<f64>() / n;
        let sd = (reps.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(reps.iter().all(|&d| d >= 1.0));
        assert!((mean - oracle).abs() < 3.0 * sd / n.sqrt(), "mean Delta_n = {mean}, sd = {sd}");
    }

    #[test]
    fn gumbel_constants() {
        let (a, b) = gumbel_centering::<f64>(1000).unwrap();
        let ln_n = 1000f64.ln();
        let expect_a = (2.0 * ln_n).sqrt() - (ln_n.ln() + (4.0 * std::f64::consts::PI).ln()) / (8.0 * ln_n).sqrt();
        assert!((a - expect_a).abs() < 1e-14);
        assert!((b - 1.0 / (2.0 * ln_n).sqrt()).abs() < 1e-15);
        assert!(gumbel_centering::<f64>(1).is_err());
        let mut prev = gumbel_centering::<f64>(8).unwrap().0;
        for n in 9..5000 {
            let (a, _) = gumbel_centering::<f64>(n).unwrap();
            assert!(a > prev, "n={n}");
            prev = a;
        }
    }

    #[test]
    fn lln_threshold_values() {
        assert!((lln_threshold(2.0f64).unwrap() - 2f64.exp()).abs() < 1e-14);
        let t4 = lln_threshold(4.0f64).unwrap();
        assert!((t4 - 8f64.exp()).abs() < 1e-9);
        assert!((2900.0..3100.0).contains(&t4));
        assert!((unit_mean_variance(2.0f64).unwrap() - (4f64.exp() - 1.0)).abs() < 1e-12);
        assert!((unit_mean_variance(2.0f64).unwrap() - 53.598).abs() < 1e-3);
        assert!(lln_threshold(0.0f64).is_err());
    }

    #[test]
    fn max_share_limits_and_values() {
        let flat = Lognormal::new(0.0f64, 1e-9).unwrap();
        for &n in &[2usize, 10, 1000] {
            let v = max_share_proxy(&flat, n).unwrap();
            assert!((v - 1.0 / n as f64).abs() < 1e-6, "n={n}: {v}");
        }
        let s4 = Lognormal::unit_mean(4.0f64).unwrap();
        let v3 = max_share_proxy(&s4, 1000).unwrap();
        assert!((0.4..=0.6).contains(&v3), "{v3}");
        assert!(max_share_proxy(&s4, 1).is_err());
    }

    #[test]
    fn max_share_monotone_on_grid() {
        let ns = [10usize, 100, 1000, 10_000];
        let sigmas: Vec<f64> = (1..=13).map(|i| 0.5 * i as f64).collect();
        for &n in &ns {
            let mut prev = 0.0;
            for &s in &sigmas {
                let v = max_share_proxy(&Lognormal::unit_mean(s).unwrap(), n).unwrap();
                assert!(v > prev && v < 1.0, "n={n} sigma={s}");
                prev = v;
            }
        }
        for &s in &sigmas {
            let spec = Lognormal::unit_mean(s).unwrap();
            let mut prev = 1.0;
            for &n in &ns {
                let v = max_share_proxy(&spec, n).unwrap();
                assert!(v < prev, "n={n} sigma={s}");
                prev = v;
            }
        }
    }

    #[test]
    fn conjunction_small_epsilon_limit() {
        // choose the spec so that S(1) = 0.5 exactly: median at 1
        let spec = Lognormal::new(0.0f64, 1.0).unwrap();
        let c = compare_conjunction_disjunction(&spec, 1.0, 1e-12, 10).unwrap();
        assert!((c.conjunction() - 0.5f64.powi(10)).abs() < 1e-12);
        assert!((c.ln_disjunction.exp() - 5.0).abs() < 1e-9);
        assert_eq!(c.disjunction(), 1.0);
        assert!(c.disjunction_wins);
        assert!(!c.degenerate);
        // log-space and linear-space agree
        let lin_conj = spec.survival(1.0 + 1e-12).unwrap().powi(10);
        assert!((c.conjunction() / lin_conj - 1.0).abs() < 1e-10);
        let lin_disj = 10.0 * spec.survival(1.0 + 10.0 * 1e-12).unwrap();
        assert!((c.ln_disjunction.exp() / lin_disj - 1.0).abs() < 1e-10);
    }

    #[test]
    fn conjunction_heavy_tail_case() {
        let spec = Lognormal::unit_mean(4.0f64).unwrap();
        let c = compare_conjunction_disjunction(&spec, 1.0, 0.5, 1000).unwrap();
        // oracle: direct evaluation of both logs
        let s1 = spec.survival(1.5).unwrap();
        let s2 = spec.survival(501.0).unwrap();
        assert!(((1000f64).ln() + s2.ln() - c.ln_disjunction).abs() < 1e-9);
        assert!((1000.0 * s1.ln() - c.ln_conjunction).abs() < 1e-9);
        assert!(c.disjunction_wins);
        assert!(compare_conjunction_disjunction(&spec, 0.0, 0.5, 10).is_err());
        assert!(compare_conjunction_disjunction(&spec, 1.0, 0.5, 1).is_err());
    }

    #[test]
    fn single_big_jump_smoke() {
        let spec = Lognormal::unit_mean(4.0).unwrap();
        let r = single_big_jump_ratio(&spec, 2, 0.9999, 10_000_000, 5).unwrap();
        assert!((0.8..=1.0).contains(&r), "ratio {r}");
    }
}
