use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::scalar::Scalar;

use super::special::{ln_normal_sf, normal_cdf, normal_quantile, normal_sf};

/// Lognormal law `X = exp(log_scale + sigma * Z)`, `Z ~ N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lognormal<F> {
    log_scale: F,
    sigma: F,
}

impl<F: Scalar> Lognormal<F> {
    pub fn new(log_scale: F, sigma: F) -> Result<Self> {
        if !log_scale.is_finite() {
            return Err(Error::param("log_scale", format!("{log_scale} is not finite")));
        }
        if !(sigma.is_finite() && sigma > F::zero()) {
            return Err(Error::param("sigma", format!("{sigma} must be finite and positive")));
        }
        let spec = Self { log_scale, sigma };
        let mean = spec.mean();
        if !(mean.is_finite() && mean > F::zero()) {
            return Err(Error::param("sigma", format!("mean exp(log_scale + sigma^2/2) = {mean} is not finite")));
        }
        Ok(spec)
    }

    /// The member of the family with `E[X] = 1` (`log_scale = -sigma^2 / 2`).
    pub fn unit_mean(sigma: F) -> Result<Self> {
        if !(sigma.is_finite() && sigma > F::zero()) {
            return Err(Error::param("sigma", format!("{sigma} must be finite and positive")));
        }
        Self::new(-sigma * sigma / F::lit(2.0), sigma)
    }

    pub fn log_scale(&self) -> F {
        self.log_scale
    }

    pub fn sigma(&self) -> F {
        self.sigma
    }

    pub fn mean(&self) -> F {
        (self.log_scale + self.sigma * self.sigma / F::lit(2.0)).exp()
    }

    pub fn median(&self) -> F {
        self.log_scale.exp()
    }

    pub fn variance(&self) -> F {
        let s2 = self.sigma * self.sigma;
        (s2.exp() - F::one()) * (F::lit(2.0) * self.log_scale + s2).exp()
    }

    #[inline]
    fn standardize(&self, x: F) -> F {
        (x.ln() - self.log_scale) / self.sigma
    }

    pub fn ln_pdf(&self, x: F) -> F {
        if x <= F::zero() {
            return F::neg_infinity();
        }
        let z = self.standardize(x);
        -F::lit(0.5) * z * z - x.ln() - self.sigma.ln() - F::lit(0.5) * F::TAU().ln()
    }

    pub fn pdf(&self, x: F) -> F {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: F) -> F {
        if x <= F::zero() {
            F::zero()
        } else {
            normal_cdf(self.standardize(x))
        }
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: F) -> Result<F> {
        if !(x > F::zero()) {
            return Err(Error::param("x", format!("{x} must be positive")));
        }
        Ok(normal_sf(self.standardize(x)))
    }

    /// `ln P(X > x)`, finite deep into the tail.
    pub fn ln_survival(&self, x: F) -> Result<F> {
        if !(x > F::zero()) {
            return Err(Error::param("x", format!("{x} must be positive")));
        }
        Ok(ln_normal_sf(self.standardize(x)))
    }

    pub fn quantile(&self, p: F) -> Result<F> {
        Ok(self.from_standard_normal(normal_quantile(p)?))
    }

    /// `x` with `survival(x) = q`; accurate deep in the upper tail.
    pub fn inverse_survival(&self, q: F) -> Result<F> {
        Ok(self.from_standard_normal(-normal_quantile(q)?))
    }

    #[inline]
    pub fn from_standard_normal(&self, z: F) -> F {
        (self.sigma * z + self.log_scale).exp()
    }

    /// `count` i.i.d. draws from `stream`.
    pub fn sample(&self, stream: &mut Stream, count: usize) -> Result<Vec<F>> {
        if count == 0 {
            return Err(Error::param("count", "must be at least 1"));
        }
        Ok((0..count).map(|_| self.from_standard_normal(F::lit(stream.standard_normal()))).collect())
    }
}
