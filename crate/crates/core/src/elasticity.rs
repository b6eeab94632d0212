//! Closed-form elasticity predictions.

use crate::distributions::special::erfc;
use crate::error::{Error, Result};
use crate::regress::{ols_loglog, ResponseMode};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Law of large numbers: output is proportional to size.
    Lln,
    /// The largest draws carry the sum.
    MaxDominated,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::Lln => "lln",
            Regime::MaxDominated => "max-dominated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction<F> {
    pub beta: F,
    pub regime: Regime,
    pub n_min: F,
    pub sigma: F,
    pub alpha: Option<F>,
    pub fraction: F,
}

impl<F: Scalar> Prediction<F> {
    pub fn effective_n_min(&self) -> F {
        self.n_min * self.fraction
    }
}

/// Elasticity of the largest draw in a group of `n`: `sigma / sqrt(2 ln n)`.
///
/// Only meaningful while the maximum dominates, roughly `sigma >= sqrt(2 ln n)`.
pub fn beta_single<F: Scalar>(n: F, sigma: F) -> Result<F> {
    if !(n >= F::lit(2.0)) {
        return Err(Error::param("n", format!("{n} < 2")));
    }
    if !(sigma > F::zero()) || !sigma.is_finite() {
        return Err(Error::param("sigma", format!("{sigma} must be positive")));
    }
    Ok(sigma / (F::lit(2.0) * n.ln()).sqrt())
}

/// `sigma` at which [`beta_single`] equals 1.
pub fn boundary_sigma<F: Scalar>(n: F) -> Result<F> {
    if !(n >= F::lit(2.0)) {
        return Err(Error::param("n", format!("{n} < 2")));
    }
    Ok((F::lit(2.0) * n.ln()).sqrt())
}

/// `sigma` at which [`beta_single`] equals `beta`.
pub fn iso_sigma<F: Scalar>(n: F, beta: F) -> Result<F> {
    Ok(beta * boundary_sigma(n)?)
}

/// Piecewise approximation of `E[ln Y]` for a unit-mean lognormal group of size `n`.
pub fn expected_log_output<F: Scalar>(n: F, sigma: F) -> F {
    let ln_n = n.ln();
    let half_var = sigma * sigma / F::lit(2.0);
    if ln_n >= half_var {
        ln_n
    } else {
        -half_var + sigma * (F::lit(2.0) * ln_n).sqrt()
    }
}

/// `erf(b) - erf(a)` without cancellation.
fn erf_diff<F: Scalar>(a: F, b: F) -> F {
    if (b - a).abs() < F::lit(1e-6) {
        // Simpson on the Gaussian kernel
        let two_over_sqrt_pi = F::FRAC_2_SQRT_PI();
        let mid = (a + b) / F::lit(2.0);
        let k = |t: F| (-t * t).exp();
        return two_over_sqrt_pi * (b - a) / F::lit(6.0) * (k(a) + F::lit(4.0) * k(mid) + k(b));
    }
    erfc(a) - erfc(b)
}

/// Cross-sectional elasticity for Pareto-distributed group sizes.
///
/// `fraction` scales `n_min` only; the effective minimum must exceed 1.
pub fn beta_ave<F: Scalar>(n_min: F, sigma: F, alpha: F, fraction: F) -> Result<Prediction<F>> {
    for (name, v) in [("n_min", n_min), ("sigma", sigma), ("alpha", alpha)] {
        if !(v > F::zero()) || !v.is_finite() {
            return Err(Error::param(name, format!("{v} must be positive and finite")));
        }
    }
    if !(fraction > F::zero() && fraction <= F::one()) {
        return Err(Error::param("fraction", format!("{fraction} not in (0, 1]")));
    }
    let n_eff = n_min * fraction;
    if !(n_eff > F::one()) {
        return Err(Error::param("n_min", format!("effective n_min {n_eff} must exceed 1")));
    }
    let ln_n = n_eff.ln();
    let half_var = sigma * sigma / F::lit(2.0);
    let base = Prediction { beta: F::one(), regime: Regime::Lln, n_min, sigma, alpha: Some(alpha), fraction };
    if ln_n >= half_var {
        return Ok(base);
    }
    let two = F::lit(2.0);
    let n_pow = (alpha * ln_n).exp();
    let lead = sigma * n_pow * (two * F::PI() * alpha).sqrt() * (F::one() - two * alpha * ln_n) / F::lit(4.0);
    let diff = erf_diff((alpha * ln_n).sqrt(), (alpha * half_var).sqrt());
    let middle = alpha * sigma * (two * ln_n).sqrt() / two;
    let tail = n_pow * (-alpha * half_var).exp() * (F::one() - alpha * ln_n);
    Ok(Prediction { beta: lead * diff + middle + tail, regime: Regime::MaxDominated, ..base })
}

/// Which parameter a [`sweep`] varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Sigma,
    Fraction,
    Alpha,
}

/// Evaluate [`beta_ave`] along one axis, keeping the other parameters of `base`.
/// Points where the formula is undefined are returned as errors in place.
pub fn sweep<F: Scalar>(
    axis: SweepAxis,
    values: &[F],
    n_min: F,
    sigma: F,
    alpha: F,
    fraction: F,
) -> Vec<Result<Prediction<F>>> {
    values
        .iter()
        .map(|&v| match axis {
            SweepAxis::Sigma => beta_ave(n_min, v, alpha, fraction),
            SweepAxis::Fraction => beta_ave(n_min, sigma, alpha, v),
            SweepAxis::Alpha => beta_ave(n_min, sigma, v, fraction),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superlinearity<F> {
    pub superlinear: bool,
    pub exponent: F,
    pub std_error: F,
}

/// Fit `ln output = c + beta ln size` and report whether `beta > 1`.
pub fn is_superlinear<F: Scalar>(sizes: &[F], outputs: &[F]) -> Result<Superlinearity<F>> {
    let fit = ols_loglog(sizes, outputs, ResponseMode::Total)?;
    Ok(Superlinearity { superlinear: fit.slope > F::one(), exponent: fit.slope, std_error: fit.slope_se })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_single_cases() {
        let sigma = 3.0f64;
        let n = (sigma * sigma / 2.0).exp();
        assert!((beta_single(n, sigma).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(beta_single(1f64.exp().powi(2), 4.0).unwrap(), 2.0);
        let b = beta_single(1e4f64, 4.29).unwrap();
        assert!((b - 4.29 / 4.291932052).abs() < 1e-9);
        assert!((b - 1.0).abs() < 0.001);
        assert!(beta_single(1.5f64, 1.0).is_err());
        assert!(beta_single(10f64, 0.0).is_err());
    }

    #[test]
    fn boundary_round_trip() {
        for &n in &[2.0f64, 10.0, 1e3, 1e6, 1e9] {
            let s = boundary_sigma(n).unwrap();
            assert!((beta_single(n, s).unwrap() - 1.0).abs() < 1e-12);
            let iso = iso_sigma(n, 1.5).unwrap();
            assert!((beta_single(n, iso).unwrap() - 1.5).abs() < 1e-12);
        }
        assert!((boundary_sigma(1f64.exp().powi(2)).unwrap() - 2.0).abs() < 1e-15);
        assert!(boundary_sigma(1.0f64).is_err());
    }

    #[test]
    fn expected_log_output_cases() {
        let sigma = 2.5f64;
        let n = (sigma * sigma / 2.0).exp();
        assert!((expected_log_output(n, sigma) - sigma * sigma / 2.0).abs() < 1e-12);
        assert_eq!(expected_log_output(50.0f64, 0.0), 50f64.ln());
        let oracle = -8.0 + 4.0 * (2.0 * 100f64.ln()).sqrt();
        assert!((expected_log_output(100.0f64, 4.0) - oracle).abs() < 1e-12);
        assert!((oracle - 4.139).abs() < 0.001);
    }

    #[test]
    fn beta_ave_reference_values() {
        let p = beta_ave(287.0f64, 2.0, 0.67, 1.0).unwrap();
        assert_eq!(p.beta, 1.0);
        assert_eq!(p.regime, Regime::Lln);
        let q = beta_ave(287.0f64, 2.0, 0.67, 0.005).unwrap();
        assert_eq!(q.regime, Regime::MaxDominated);
        assert!((q.beta - 1.082).abs() < 0.001, "{}", q.beta);
        assert!((q.effective_n_min() - 1.435).abs() < 1e-12);
        let direct = beta_ave(1.435f64, 2.0, 0.67, 1.0).unwrap();
        assert!((direct.beta - q.beta).abs() < 1e-12);
    }

    #[test]
    fn beta_ave_rejects_bad_inputs() {
        assert!(beta_ave(1.0f64, 2.0, 1.0, 1.0).is_err());
        assert!(beta_ave(100.0f64, 2.0, 1.0, 0.01).is_err());
        assert!(beta_ave(100.0f64, 0.0, 1.0, 1.0).is_err());
        assert!(beta_ave(100.0f64, 2.0, -1.0, 1.0).is_err());
        assert!(beta_ave(100.0f64, 2.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn lln_branch_is_exact() {
        for &sigma in &[0.5f64, 1.0, 2.0, 3.0] {
            let n = (sigma * sigma / 2.0).exp().max(1.0001);
            assert_eq!(beta_ave(n * 1.01, sigma, 1.0, 1.0).unwrap().beta, 1.0);
        }
        let sigma = 3.0f64;
        let at = (sigma * sigma / 2.0).exp();
        assert_eq!(beta_ave(at, sigma, 1.0, 1.0).unwrap().regime, Regime::Lln);
    }

    #[test]
    fn junction_continuity() {
        for &sigma in &[2.0f64, 3.0, 4.0, 5.0] {
            for &alpha in &[0.5f64, 1.0, 1.5] {
                let at = (sigma * sigma / 2.0).exp();
                let below = beta_ave(at * (1.0 - 1e-9), sigma, alpha, 1.0).unwrap();
                assert_eq!(below.regime, Regime::MaxDominated);
                assert!((below.beta - 1.0).abs() < 0.05, "{sigma} {alpha} {}", below.beta);
            }
        }
    }

    #[test]
    fn grid_monotonicity_and_lower_bound() {
        let sigmas: Vec<f64> = (0..=60).map(|i| 0.5 + 0.1 * i as f64).collect();
        for &n_min in &[2.0f64, 10.0, 100.0, 1e3, 1e4] {
            for &alpha in &[0.5f64, 0.67, 1.0, 1.5, 2.5] {
                let mut prev = 0.0;
                for &s in &sigmas {
                    let b = beta_ave(n_min, s, alpha, 1.0).unwrap().beta;
                    assert!(b >= 1.0 - 1e-9, "n_min={n_min} alpha={alpha} sigma={s} beta={b}");
                    assert!(b >= prev - 1e-9, "sigma monotonicity at {n_min} {alpha} {s}");
                    prev = b;
                }
            }
        }
        let fractions = [0.001f64, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0];
        for &sigma in &[2.0f64, 3.0, 4.5] {
            let out = sweep(SweepAxis::Fraction, &fractions, 2000.0, sigma, 0.67, 1.0);
            let betas: Vec<f64> = out.into_iter().map(|r| r.unwrap().beta).collect();
            assert!(betas.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{betas:?}");
        }
    }

    #[test]
    fn alpha_matters_less_than_sigma() {
        let alphas: Vec<f64> = (0..=10).map(|i| 0.5 + 0.1 * i as f64).collect();
        let sigmas: Vec<f64> = (0..=10).map(|i| 1.5 + 0.5 * i as f64).collect();
        let range = |v: Vec<f64>| {
            v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
        };
        let a = sweep(SweepAxis::Alpha, &alphas, 10.0, 4.0, 1.0, 1.0);
        let s = sweep(SweepAxis::Sigma, &sigmas, 10.0, 4.0, 1.0, 1.0);
        let ra = range(a.into_iter().map(|r| r.unwrap().beta).collect());
        let rs = range(s.into_iter().map(|r| r.unwrap().beta).collect());
        assert!(ra < rs, "{ra} vs {rs}");
    }

    #[test]
    fn erf_diff_near_equal_arguments() {
        let a = 0.8f64;
        let b = a + 1e-8;
        let exact = 2.0 / std::f64::consts::PI.sqrt() * (-a * a).exp() * 1e-8;
        assert!((erf_diff(a, b) / exact - 1.0).abs() < 1e-6);
    }

    #[test]
    fn superlinearity_predicate() {
        let sizes: Vec<f64> = (1..=30).map(|i| (i * i) as f64 * 17.0).collect();
        let lin = is_superlinear(&sizes, &sizes).unwrap();
        assert!(!lin.superlinear);
        assert!((lin.exponent - 1.0).abs() < 1e-12);
        let sup: Vec<f64> = sizes.iter().map(|n| n.powf(1.1)).collect();
        let s = is_superlinear(&sizes, &sup).unwrap();
        assert!(s.superlinear);
        assert!((s.exponent - 1.1).abs() < 1e-10);
        assert!(is_superlinear(&[5.0f64; 4], &[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn f32_instantiation() {
        let q = beta_ave(287.0f32, 2.0, 0.67, 0.005).unwrap();
        assert!((q.beta - 1.082).abs() < 0.01);
    }
}
