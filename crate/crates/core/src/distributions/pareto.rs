use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::scalar::Scalar;

/// Pareto law with density `alpha / n_min * (n / n_min)^(-alpha - 1)` on
/// `[n_min, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pareto<F> {
    n_min: F,
    alpha: F,
}

impl<F: Scalar> Pareto<F> {
    pub fn new(n_min: F, alpha: F) -> Result<Self> {
        if !(n_min.is_finite() && n_min > F::zero()) {
            return Err(Error::param("n_min", format!("{n_min} must be finite and positive")));
        }
        if !(alpha.is_finite() && alpha > F::zero()) {
            return Err(Error::param("alpha", format!("{alpha} must be finite and positive")));
        }
        Ok(Self { n_min, alpha })
    }

    pub fn n_min(&self) -> F {
        self.n_min
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn pdf(&self, n: F) -> F {
        if n < self.n_min {
            return F::zero();
        }
        self.alpha / self.n_min * (n / self.n_min).powf(-self.alpha - F::one())
    }

    /// `P(N > n) = (n / n_min)^(-alpha)` above the lower bound.
    pub fn survival(&self, n: F) -> F {
        if n <= self.n_min {
            F::one()
        } else {
            (n / self.n_min).powf(-self.alpha)
        }
    }

    pub fn cdf(&self, n: F) -> F {
        F::one() - self.survival(n)
    }

    /// Inverse-CDF map of a uniform `u` in `[0, 1)`; `u = 0` gives `n_min`.
    #[inline]
    pub fn from_uniform(&self, u: F) -> F {
        self.n_min * (F::one() - u).powf(-self.alpha.recip())
    }

    pub fn quantile(&self, p: F) -> Result<F> {
        if !(p >= F::zero() && p < F::one()) {
            return Err(Error::param("p", format!("{p} is outside [0, 1)")));
        }
        Ok(self.from_uniform(p))
    }

    pub fn sample(&self, stream: &mut Stream, count: usize) -> Result<Vec<F>> {
        if count == 0 {
            return Err(Error::param("count", "must be at least 1"));
        }
        Ok((0..count).map(|_| self.from_uniform(F::lit(stream.uniform()))).collect())
    }
}
