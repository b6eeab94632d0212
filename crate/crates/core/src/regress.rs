//! Ordinary least squares for log-log elasticity regressions.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::distributions::special::erfc;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// What the response column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResponseMode {
    /// Aggregate output `Y`; the slope is `beta`.
    #[default]
    Total,
    /// Per-capita output `Y / n`; the slope is `delta = beta - 1`.
    PerCapita,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Log10,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StandardErrors {
    /// Homoskedastic OLS standard errors.
    #[default]
    Plain,
    /// White's heteroskedasticity-consistent errors with the `n / (n - 2)`
    /// small-sample factor.
    Hc1,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OlsOptions {
    pub mode: ResponseMode,
    pub base: LogBase,
    pub errors: StandardErrors,
}

/// Simple regression `y = intercept + slope * x + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit<F> {
    pub slope: F,
    pub intercept: F,
    pub slope_se: F,
    pub intercept_se: F,
    pub r2: F,
    pub adj_r2: F,
    pub f_stat: F,
    /// Numerator and denominator degrees of freedom, `(1, n - 2)`.
    pub df: (usize, usize),
    pub n_obs: usize,
    pub residuals: Vec<F>,
}

impl<F: Scalar> OlsFit<F> {
    pub fn slope_t(&self) -> F {
        self.slope / self.slope_se
    }

    pub fn intercept_t(&self) -> F {
        self.intercept / self.intercept_se
    }

    /// Two-sided p-value of `slope = 0` from Student's t with `n - 2` df.
    pub fn slope_p_value(&self) -> f64 {
        t_two_sided(self.slope_t().to_f64_lossy(), self.df.1)
    }

    pub fn intercept_p_value(&self) -> f64 {
        t_two_sided(self.intercept_t().to_f64_lossy(), self.df.1)
    }

    /// p-value of the overall F test; equals the slope p-value.
    pub fn f_p_value(&self) -> f64 {
        self.slope_p_value()
    }
}

fn t_two_sided(t: f64, df: usize) -> f64 {
    if !t.is_finite() {
        return if t.is_nan() { f64::NAN } else { 0.0 };
    }
    match StudentsT::new(0.0, 1.0, df as f64) {
        Ok(dist) => (2.0 * dist.sf(t.abs())).min(1.0),
        Err(_) => f64::NAN,
    }
}

/// OLS of `y` on `x` with an intercept. Sums of squares are accumulated
/// around the means.
pub fn ols<F: Scalar>(x: &[F], y: &[F], errors: StandardErrors) -> Result<OlsFit<F>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::param("n_obs", format!("{n} observations; need at least 3")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::param("data", "non-finite value"));
    }
    let nf = F::from_usize_lossy(n);
    let mean_x = x.iter().copied().sum::<F>() / nf;
    let mean_y = y.iter().copied().sum::<F>() / nf;
    let mut sxx = F::zero();
    let mut sxy = F::zero();
    let mut syy = F::zero();
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if !(sxx > F::zero()) || x.iter().all(|&v| v == x[0]) {
        return Err(Error::Degenerate("all regressor values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residuals: Vec<F> = x.iter().zip(y).map(|(&xi, &yi)| yi - intercept - slope * xi).collect();
    let ssr: F = residuals.iter().map(|&e| e * e).sum();
    let df_resid = n - 2;
    let dfr = F::from_usize_lossy(df_resid);
    let sigma2 = ssr / dfr;

    let (slope_se, intercept_se) = match errors {
        StandardErrors::Plain => {
            let v_slope = sigma2 / sxx;
            let v_int = sigma2 * (nf.recip() + mean_x * mean_x / sxx);
            (v_slope.sqrt(), v_int.sqrt())
        }
        StandardErrors::Hc1 => {
            // sandwich in centered coordinates u = x - mean_x
            let mut s_e2 = F::zero();
            let mut s_ue2 = F::zero();
            let mut s_uue2 = F::zero();
            for (&xi, &e) in x.iter().zip(&residuals) {
                let u = xi - mean_x;
                let e2 = e * e;
                s_e2 = s_e2 + e2;
                s_ue2 = s_ue2 + u * e2;
                s_uue2 = s_uue2 + u * u * e2;
            }
            let scale = nf / dfr;
            let v_c = s_e2 / (nf * nf);
            let v_b = s_uue2 / (sxx * sxx);
            let cov = s_ue2 / (nf * sxx);
            let v_int = v_c + mean_x * mean_x * v_b - F::lit(2.0) * mean_x * cov;
            ((scale * v_b).sqrt(), (scale * v_int).sqrt())
        }
    };

    let r2 = if syy > F::zero() {
        (F::one() - ssr / syy).max(F::zero()).min(F::one())
    } else {
        F::one()
    };
    let adj_r2 = F::one() - (F::one() - r2) * (nf - F::one()) / dfr;
    let f_stat = if ssr > F::zero() { (syy - ssr).max(F::zero()) / sigma2 } else { F::infinity() };

    Ok(OlsFit {
        slope,
        intercept,
        slope_se,
        intercept_se,
        r2,
        adj_r2,
        f_stat,
        df: (1, df_resid),
        n_obs: n,
        residuals,
    })
}

/// Regress `log(response)` on `log(size)`.
pub fn ols_loglog<F: Scalar>(sizes: &[F], responses: &[F], mode: ResponseMode) -> Result<OlsFit<F>> {
    ols_loglog_with(sizes, responses, OlsOptions { mode, ..Default::default() })
}

pub fn ols_loglog_with<F: Scalar>(sizes: &[F], responses: &[F], opts: OlsOptions) -> Result<OlsFit<F>> {
    if sizes.len() != responses.len() {
        return Err(Error::LengthMismatch { left: sizes.len(), right: responses.len() });
    }
    if sizes.iter().chain(responses).any(|&v| !(v > F::zero()) || !v.is_finite()) {
        return Err(Error::param("data", "sizes and responses must be positive and finite"));
    }
    let log = |v: F| match opts.base {
        LogBase::Natural => v.ln(),
        LogBase::Log10 => v.log10(),
    };
    let x: Vec<F> = sizes.iter().map(|&s| log(s)).collect();
    let y: Vec<F> = match opts.mode {
        ResponseMode::Total => responses.iter().map(|&r| log(r)).collect(),
        ResponseMode::PerCapita => sizes.iter().zip(responses).map(|(&s, &r)| log(r / s)).collect(),
    };
    ols(&x, &y, opts.errors)
}

/// `(a - b) / sqrt(se_a^2 + se_b^2)` with a two-sided normal p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison<F> {
    pub z_stat: F,
    pub p_value: F,
    pub slope_a: F,
    pub se_a: F,
    pub slope_b: F,
    pub se_b: F,
}

pub fn compare_coefficients<F: Scalar>(a: (F, F), b: (F, F)) -> Result<Comparison<F>> {
    let (slope_a, se_a) = a;
    let (slope_b, se_b) = b;
    if !(se_a > F::zero() && se_b > F::zero()) {
        return Err(Error::param("se", "standard errors must be positive"));
    }
    let z_stat = (slope_a - slope_b) / (se_a * se_a + se_b * se_b).sqrt();
    let p_value = erfc(z_stat.abs() * F::FRAC_1_SQRT_2());
    Ok(Comparison { z_stat, p_value, slope_a, se_a, slope_b, se_b })
}
