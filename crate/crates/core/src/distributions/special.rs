//! Error function, Gaussian tail functions and log-sum-exp.
//!
//! `erf` uses the positive-term series
//! `erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_k (2x^2)^k x / (1*3*...*(2k+1))`
//! below `|x| = 2.5` and the Laplace continued fraction for `erfc` above,
//! so neither branch suffers from cancellation. Absolute error is below
//! `1e-15` in `f64` on the whole real line.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const SERIES_CUTOFF: f64 = 2.5;
const MAX_ITER: usize = 500;

#[inline]
fn frac_2_sqrt_pi<F: Scalar>() -> F {
    F::FRAC_2_SQRT_PI()
}

/// Series branch, valid for `x >= 0`. Returns `erf(x)`.
fn erf_series<F: Scalar>(x: F) -> F {
    let two_x2 = F::lit(2.0) * x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0usize;
    while k < MAX_ITER {
        k += 1;
        term = term * two_x2 / F::from_usize_lossy(2 * k + 1);
        sum = sum + term;
        if term <= sum * F::epsilon() {
            break;
        }
    }
    frac_2_sqrt_pi::<F>() * (-x * x).exp() * sum
}

/// Continued fraction `x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))`, evaluated
/// with the modified Lentz method. `erfc(x) = exp(-x^2) / (sqrt(pi) * cf)`.
fn erfc_cf_denominator<F: Scalar>(x: F) -> F {
    let tiny = F::min_positive_value().sqrt();
    let mut f = x;
    if f == F::zero() {
        f = tiny;
    }
    let mut c = f;
    let mut d = F::zero();
    for k in 1..MAX_ITER {
        let a = F::from_usize_lossy(k) * F::lit(0.5);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - F::one()).abs() <= F::epsilon() {
            break;
        }
    }
    f
}

/// Error function.
pub fn erf<F: Scalar>(x: F) -> F {
    if x.is_nan() {
        return x;
    }
    let ax = x.abs();
    let r = if ax < F::lit(SERIES_CUTOFF) {
        erf_series(ax)
    } else {
        F::one() - erfc_positive(ax)
    };
    if x < F::zero() {
        -r
    } else {
        r
    }
}

fn erfc_positive<F: Scalar>(x: F) -> F {
    if x < F::lit(SERIES_CUTOFF) {
        return F::one() - erf_series(x);
    }
    (-x * x).exp() / (F::PI().sqrt() * erfc_cf_denominator(x))
}

/// Complementary error function, accurate in relative terms for large `x`.
pub fn erfc<F: Scalar>(x: F) -> F {
    if x.is_nan() {
        return x;
    }
    if x >= F::zero() {
        erfc_positive(x)
    } else {
        F::lit(2.0) - erfc_positive(-x)
    }
}

/// `ln(erfc(x))`, finite far beyond the underflow point of `erfc`.
pub fn ln_erfc<F: Scalar>(x: F) -> F {
    if x >= F::lit(SERIES_CUTOFF) {
        -x * x - (F::PI().sqrt() * erfc_cf_denominator(x)).ln()
    } else {
        erfc(x).ln()
    }
}

/// Standard normal CDF.
pub fn normal_cdf<F: Scalar>(z: F) -> F {
    F::lit(0.5) * erfc(-z * F::FRAC_1_SQRT_2())
}

/// Standard normal survival function `1 - Phi(z)`.
pub fn normal_sf<F: Scalar>(z: F) -> F {
    F::lit(0.5) * erfc(z * F::FRAC_1_SQRT_2())
}

/// `ln(1 - Phi(z))`.
pub fn ln_normal_sf<F: Scalar>(z: F) -> F {
    ln_erfc(z * F::FRAC_1_SQRT_2()) - F::LN_2()
}

/// Standard normal density.
pub fn normal_pdf<F: Scalar>(z: F) -> F {
    (-F::lit(0.5) * z * z).exp() / (F::TAU()).sqrt()
}

// Acklam's rational approximation to the normal quantile (relative error
// about 1.15e-9).
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_690e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.02425;

/// Normal quantile to about 1e-9 relative accuracy. Used by the samplers,
/// where the inverse-CDF transform only needs to be monotone and close.
/// `p` must lie in the open unit interval.
#[inline]
pub fn normal_quantile_fast(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (-p).ln_1p()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

fn lower_quantile<F: Scalar>(p: F) -> F {
    // p <= 1/2 here, so the refinement works on the accurate lower tail.
    let mut x = F::lit(normal_quantile_fast(p.to_f64_lossy()));
    for _ in 0..2 {
        let e = normal_cdf(x) - p;
        let u = e * F::TAU().sqrt() * (x * x * F::lit(0.5)).exp();
        x = x - u / (F::one() + x * u * F::lit(0.5));
    }
    x
}

/// Standard normal quantile, refined by Halley steps to full precision.
pub fn normal_quantile<F: Scalar>(p: F) -> Result<F> {
    if !(p > F::zero() && p < F::one()) {
        return Err(Error::param("p", format!("{p} is outside (0, 1)")));
    }
    let half = F::lit(0.5);
    Ok(if p <= half { lower_quantile(p) } else { -lower_quantile(F::one() - p) })
}

/// Natural log of `sum(exp(v))`, shifted by the maximum.
pub fn log_sum_exp<F: Scalar>(values: &[F]) -> Result<F> {
    let (&first, rest) = values.split_first().ok_or(Error::EmptyInput("log_sum_exp"))?;
    if rest.is_empty() {
        return Ok(first);
    }
    let max = values.iter().copied().fold(F::neg_infinity(), F::max);
    if max == F::infinity() {
        return Ok(max);
    }
    if max == F::neg_infinity() {
        return Ok(max);
    }
    let s: F = values.iter().map(|&v| (v - max).exp()).sum();
    Ok(max + s.ln())
}

/// Streaming log-sum-exp accumulator.
///
/// Keeps `(max, sum(exp(v - max)))` and rescales when a new maximum shows
/// up, so the state never overflows whatever the spread of inputs.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp<F> {
    max: F,
    scaled: F,
    count: u64,
}

impl<F: Scalar> Default for LogSumExp<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> LogSumExp<F> {
    pub fn new() -> Self {
        Self { max: F::neg_infinity(), scaled: F::zero(), count: 0 }
    }

    #[inline]
    pub fn push(&mut self, v: F) {
        self.count += 1;
        if v > self.max {
            self.scaled = self.scaled * (self.max - v).exp() + F::one();
            self.max = v;
        } else {
            self.scaled = self.scaled + (v - self.max).exp();
        }
    }

    /// Merge another accumulator into this one.
    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        if other.max > self.max {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        } else {
            self.scaled = self.scaled + other.scaled * (other.max - self.max).exp();
        }
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Largest value pushed so far.
    pub fn max(&self) -> F {
        self.max
    }

    /// `sum(exp(v - max))`, the ratio of the sum to its largest term.
    pub fn ratio_to_max(&self) -> F {
        self.scaled
    }

    /// Current `ln(sum(exp(v)))`; `-inf` when empty.
    pub fn value(&self) -> F {
        if self.count == 0 {
            F::neg_infinity()
        } else {
            self.max + self.scaled.ln()
        }
    }
}
