use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Gamma as GammaSampler};
use statrs::distribution::{ContinuousCDF, Gamma as GammaLaw};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::rng::Stream;

use super::special::{ln_normal_sf, normal_quantile};

/// Candidate families for sizes and wages.
///
/// Tags follow the labels of the usual fit tables (`lnorm`, `trunclnorm`,
/// `powerlaw`, ...). Parameter order:
///
/// | family            | p0          | p1          |
/// |-------------------|-------------|-------------|
/// | (trunc)lnorm      | ln(x0)      | sigma       |
/// | powerlaw          | alpha       |             |
/// | norm              | mu          | sigma       |
/// | (trunc)weibull    | shape a     | scale b     |
/// | (trunc)gamma      | shape a     | rate lambda |
/// | (trunc)gumbel     | location a  | scale b     |
/// | trunccauchy       | location l  | scale s     |
/// | (trunc)logis      | location m  | scale s     |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyKind {
    Lognormal,
    TruncLognormal,
    Pareto,
    Normal,
    Weibull,
    TruncWeibull,
    Gamma,
    TruncGamma,
    Gumbel,
    TruncGumbel,
    TruncCauchy,
    Logistic,
    TruncLogistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Base {
    Lognormal,
    Pareto,
    Normal,
    Weibull,
    Gamma,
    Gumbel,
    Cauchy,
    Logistic,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 13] = [
        FamilyKind::Lognormal,
        FamilyKind::TruncLognormal,
        FamilyKind::Pareto,
        FamilyKind::Normal,
        FamilyKind::Weibull,
        FamilyKind::TruncWeibull,
        FamilyKind::Gamma,
        FamilyKind::TruncGamma,
        FamilyKind::Gumbel,
        FamilyKind::TruncGumbel,
        FamilyKind::TruncCauchy,
        FamilyKind::Logistic,
        FamilyKind::TruncLogistic,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            FamilyKind::Lognormal => "lnorm",
            FamilyKind::TruncLognormal => "trunclnorm",
            FamilyKind::Pareto => "powerlaw",
            FamilyKind::Normal => "norm",
            FamilyKind::Weibull => "weibull",
            FamilyKind::TruncWeibull => "truncweibull",
            FamilyKind::Gamma => "gamma",
            FamilyKind::TruncGamma => "truncgamma",
            FamilyKind::Gumbel => "gumbel",
            FamilyKind::TruncGumbel => "truncgumbel",
            FamilyKind::TruncCauchy => "trunccauchy",
            FamilyKind::Logistic => "logis",
            FamilyKind::TruncLogistic => "trunclogis",
        }
    }

    fn base(self) -> Base {
        match self {
            FamilyKind::Lognormal | FamilyKind::TruncLognormal => Base::Lognormal,
            FamilyKind::Pareto => Base::Pareto,
            FamilyKind::Normal => Base::Normal,
            FamilyKind::Weibull | FamilyKind::TruncWeibull => Base::Weibull,
            FamilyKind::Gamma | FamilyKind::TruncGamma => Base::Gamma,
            FamilyKind::Gumbel | FamilyKind::TruncGumbel => Base::Gumbel,
            FamilyKind::TruncCauchy => Base::Cauchy,
            FamilyKind::Logistic | FamilyKind::TruncLogistic => Base::Logistic,
        }
    }

    /// Families renormalized above a lower truncation bound.
    pub fn is_truncated(self) -> bool {
        matches!(
            self,
            FamilyKind::TruncLognormal
                | FamilyKind::TruncWeibull
                | FamilyKind::TruncGamma
                | FamilyKind::TruncGumbel
                | FamilyKind::TruncCauchy
                | FamilyKind::TruncLogistic
        )
    }

    /// Whether the family needs a lower bound (truncated families and the
    /// Pareto, whose bound is its scale).
    pub fn needs_bound(self) -> bool {
        self.is_truncated() || self == FamilyKind::Pareto
    }

    pub fn arity(self) -> usize {
        if self == FamilyKind::Pareto {
            1
        } else {
            2
        }
    }

    /// Which parameters are constrained to be positive.
    pub fn positive_params(self) -> &'static [bool] {
        match self.base() {
            Base::Pareto => &[true],
            Base::Lognormal | Base::Normal | Base::Gumbel | Base::Cauchy | Base::Logistic => &[false, true],
            Base::Weibull | Base::Gamma => &[true, true],
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self.base() {
            Base::Lognormal => &["ln(x0)", "sigma"],
            Base::Pareto => &["alpha"],
            Base::Normal => &["mu", "sigma"],
            Base::Weibull => &["a", "b"],
            Base::Gamma => &["a", "lambda"],
            Base::Gumbel => &["a", "b"],
            Base::Cauchy => &["l", "s"],
            Base::Logistic => &["m", "s"],
        }
    }

    /// Whether the support is `(0, inf)` before truncation.
    pub fn positive_support(self) -> bool {
        matches!(self.base(), Base::Lognormal | Base::Weibull | Base::Gamma | Base::Pareto)
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let alias = match s.as_str() {
            "lognormal" => "lnorm",
            "truncated-lognormal" => "trunclnorm",
            "pareto" => "powerlaw",
            "normal" => "norm",
            "truncated-weibull" => "truncweibull",
            "truncated-gamma" => "truncgamma",
            "truncated-gumbel" => "truncgumbel",
            "cauchy-truncated" | "truncated-cauchy" => "trunccauchy",
            "logistic" => "logis",
            "truncated-logistic" => "trunclogis",
            other => other,
        };
        FamilyKind::ALL
            .iter()
            .copied()
            .find(|k| k.tag() == alias)
            .ok_or_else(|| Error::param("family", format!("unknown family `{s}`")))
    }
}

/// A fully parameterized member of one family.
#[derive(Debug, Clone, PartialEq)]
pub struct FitFamily {
    kind: FamilyKind,
    params: Vec<f64>,
    bound: Option<f64>,
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl FitFamily {
    pub fn new(kind: FamilyKind, params: Vec<f64>, bound: Option<f64>) -> Result<Self> {
        if params.len() != kind.arity() {
            return Err(Error::param("params", format!("{kind} takes {} parameters, got {}", kind.arity(), params.len())));
        }
        for ((&p, &positive), name) in params.iter().zip(kind.positive_params()).zip(kind.param_names()) {
            if !p.is_finite() || (positive && p <= 0.0) {
                return Err(Error::param("params", format!("{kind}: {name} = {p} is outside its domain")));
            }
        }
        match (kind.needs_bound(), bound) {
            (true, None) => return Err(Error::param("bound", format!("{kind} needs a lower bound"))),
            (true, Some(b)) if !(b.is_finite() && b >= 0.0) => {
                return Err(Error::param("bound", format!("{b} must be finite and non-negative")))
            }
            (true, Some(b)) if kind == FamilyKind::Pareto && b <= 0.0 => {
                return Err(Error::param("bound", "powerlaw bound must be positive"))
            }
            (false, Some(_)) => return Err(Error::param("bound", format!("{kind} is not truncated"))),
            _ => {}
        }
        Ok(Self { kind, params, bound })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    fn p(&self, i: usize) -> f64 {
        self.params[i]
    }

    fn base_ln_sf(&self, x: f64) -> f64 {
        match self.kind.base() {
            Base::Lognormal => {
                if x <= 0.0 {
                    0.0
                } else {
                    ln_normal_sf((x.ln() - self.p(0)) / self.p(1))
                }
            }
            Base::Normal => ln_normal_sf((x - self.p(0)) / self.p(1)),
            Base::Pareto => {
                let xm = self.bound.unwrap_or(f64::NAN);
                if x <= xm {
                    0.0
                } else {
                    -self.p(0) * (x / xm).ln()
                }
            }
            Base::Weibull => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(x / self.p(1)).powf(self.p(0))
                }
            }
            Base::Gamma => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_ur(self.p(0), self.p(1) * x).ln()
                }
            }
            Base::Gumbel => {
                let z = (x - self.p(0)) / self.p(1);
                if z > 30.0 {
                    let t = (-z).exp();
                    -z - 0.5 * t
                } else {
                    (-(-(-z).exp()).exp_m1()).ln()
                }
            }
            Base::Cauchy => {
                let z = (x - self.p(0)) / self.p(1);
                let sf = if z > 0.0 { (1.0 / z).atan() / PI } else { 0.5 - z.atan() / PI };
                sf.ln()
            }
            Base::Logistic => -softplus((x - self.p(0)) / self.p(1)),
        }
    }

    fn base_ln_pdf(&self, x: f64) -> f64 {
        self.base_ln_pdf_with(x, &self.constants())
    }

    /// Per-parameter constants hoisted out of likelihood loops.
    fn constants(&self) -> [f64; 2] {
        match self.kind.base() {
            Base::Lognormal | Base::Normal => [self.p(1).ln() + 0.5 * (2.0 * PI).ln(), 0.0],
            Base::Pareto => {
                let a = self.p(0);
                [a.ln() + a * self.bound.unwrap_or(f64::NAN).ln(), 0.0]
            }
            Base::Weibull => [self.p(0).ln() - self.p(1).ln(), 0.0],
            Base::Gamma => [self.p(0) * self.p(1).ln() - ln_gamma(self.p(0)), 0.0],
            Base::Gumbel | Base::Logistic => [self.p(1).ln(), 0.0],
            Base::Cauchy => [(PI * self.p(1)).ln(), 0.0],
        }
    }

    #[inline]
    fn base_ln_pdf_with(&self, x: f64, c: &[f64; 2]) -> f64 {
        match self.kind.base() {
            Base::Lognormal => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let lx = x.ln();
                let z = (lx - self.p(0)) / self.p(1);
                -0.5 * z * z - lx - c[0]
            }
            Base::Normal => {
                let z = (x - self.p(0)) / self.p(1);
                -0.5 * z * z - c[0]
            }
            Base::Pareto => {
                if x < self.bound.unwrap_or(f64::NAN) {
                    return f64::NEG_INFINITY;
                }
                c[0] - (self.p(0) + 1.0) * x.ln()
            }
            Base::Weibull => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let r = x / self.p(1);
                c[0] + (self.p(0) - 1.0) * r.ln() - r.powf(self.p(0))
            }
            Base::Gamma => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                c[0] + (self.p(0) - 1.0) * x.ln() - self.p(1) * x
            }
            Base::Gumbel => {
                let z = (x - self.p(0)) / self.p(1);
                -c[0] - z - (-z).exp()
            }
            Base::Cauchy => {
                let z = (x - self.p(0)) / self.p(1);
                -c[0] - (z * z).ln_1p()
            }
            Base::Logistic => {
                let z = (x - self.p(0)) / self.p(1);
                -z - c[0] - 2.0 * softplus(-z)
            }
        }
    }

    /// Log-normalizer of the truncated law, `ln S(bound)`; zero otherwise.
    fn ln_mass(&self) -> f64 {
        if self.kind.is_truncated() {
            self.base_ln_sf(self.bound.unwrap_or(0.0))
        } else {
            0.0
        }
    }

    #[inline]
    fn below_support(&self, x: f64) -> bool {
        match self.bound {
            Some(b) => x < b,
            None => self.kind.positive_support() && x <= 0.0,
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if self.below_support(x) {
            return f64::NEG_INFINITY;
        }
        self.base_ln_pdf(x) - self.ln_mass()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Sum of log-densities over `data`.
    pub fn log_likelihood(&self, data: &[f64]) -> f64 {
        let c = self.constants();
        let mass = self.ln_mass();
        if !mass.is_finite() {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for &x in data {
            if self.below_support(x) {
                return f64::NEG_INFINITY;
            }
            total += self.base_ln_pdf_with(x, &c);
        }
        total - mass * data.len() as f64
    }

    /// `ln P(X > x)` under the (renormalized) law.
    pub fn ln_sf(&self, x: f64) -> f64 {
        if self.below_support(x) {
            return 0.0;
        }
        self.base_ln_sf(x) - self.ln_mass()
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.ln_sf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.below_support(x) {
            return 0.0;
        }
        -self.ln_sf(x).exp_m1()
    }

    /// Inverse survival of the untruncated law: the `x` with `S(x) = q`.
    fn base_isf(&self, q: f64) -> f64 {
        match self.kind.base() {
            Base::Lognormal => (self.p(0) - self.p(1) * normal_quantile(q).unwrap_or(f64::NAN)).exp(),
            Base::Normal => self.p(0) - self.p(1) * normal_quantile(q).unwrap_or(f64::NAN),
            Base::Pareto => self.bound.unwrap_or(f64::NAN) * q.powf(-1.0 / self.p(0)),
            Base::Weibull => self.p(1) * (-q.ln()).powf(1.0 / self.p(0)),
            Base::Gamma => match GammaLaw::new(self.p(0), self.p(1)) {
                Ok(g) if q >= 0.5 => g.inverse_cdf(1.0 - q),
                Ok(g) => gamma_isf_bisect(&g, self.p(0), self.p(1), q),
                Err(_) => f64::NAN,
            },
            Base::Gumbel => self.p(0) - self.p(1) * (-(-q).ln_1p()).ln(),
            Base::Cauchy => self.p(0) + self.p(1) / (PI * q).tan(),
            Base::Logistic => self.p(0) + self.p(1) * ((1.0 - q) / q).ln(),
        }
    }

    /// Quantile of the (renormalized) law at `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param("p", format!("{p} is outside (0, 1)")));
        }
        let q = (1.0 - p) * self.ln_mass().exp();
        Ok(self.base_isf(q))
    }

    pub fn sample(&self, stream: &mut Stream, count: usize) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::param("count", "must be at least 1"));
        }
        if self.kind.base() == Base::Gamma {
            let sampler = GammaSampler::new(self.p(0), 1.0 / self.p(1))
                .map_err(|e| Error::param("params", format!("gamma sampler: {e}")))?;
            let lower = self.bound.unwrap_or(0.0);
            let mass = self.ln_mass().exp();
            if mass > 1e-3 {
                let mut out = Vec::with_capacity(count);
                while out.len() < count {
                    let x: f64 = sampler.sample(stream);
                    if x >= lower {
                        out.push(x);
                    }
                }
                return Ok(out);
            }
        }
        (0..count).map(|_| self.quantile(stream.uniform_open())).collect()
    }
}

/// Gamma inverse survival for small `q`, by bisection on the upper
/// regularized incomplete gamma (the CDF-based inverse loses the tail).
fn gamma_isf_bisect(g: &GammaLaw, shape: f64, rate: f64, q: f64) -> f64 {
    let mut lo = g.inverse_cdf(0.5);
    let mut hi = lo.max(1.0 / rate);
    while gamma_ur(shape, rate * hi) > q {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_ur(shape, rate * mid) > q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
        let h = (b - a) / steps as f64;
        let mut s = f(a) + f(b);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn examples() -> Vec<FitFamily> {
        use FamilyKind::*;
        vec![
            FitFamily::new(Lognormal, vec![1.0, 0.8], None).unwrap(),
            FitFamily::new(TruncLognormal, vec![1.0, 0.8], Some(2.0)).unwrap(),
            FitFamily::new(Pareto, vec![1.7], Some(3.0)).unwrap(),
            FitFamily::new(Normal, vec![2.0, 1.5], None).unwrap(),
            FitFamily::new(Weibull, vec![1.5, 2.0], None).unwrap(),
            FitFamily::new(TruncWeibull, vec![1.5, 2.0], Some(1.0)).unwrap(),
            FitFamily::new(Gamma, vec![2.5, 1.5], None).unwrap(),
            FitFamily::new(TruncGamma, vec![2.5, 1.5], Some(1.0)).unwrap(),
            FitFamily::new(Gumbel, vec![1.0, 0.7], None).unwrap(),
            FitFamily::new(TruncGumbel, vec![1.0, 0.7], Some(0.5)).unwrap(),
            FitFamily::new(TruncCauchy, vec![1.0, 0.5], Some(0.0)).unwrap(),
            FitFamily::new(Logistic, vec![1.0, 0.5], None).unwrap(),
            FitFamily::new(TruncLogistic, vec![1.0, 0.5], Some(0.8)).unwrap(),
        ]
    }

    #[test]
    fn tags_round_trip() {
        for k in FamilyKind::ALL {
            assert_eq!(k.tag().parse::<FamilyKind>().unwrap(), k);
        }
        assert_eq!("cauchy-truncated".parse::<FamilyKind>().unwrap(), FamilyKind::TruncCauchy);
        assert!("nope".parse::<FamilyKind>().is_err());
    }

    #[test]
    fn arity_and_bounds_are_enforced() {
        assert!(FitFamily::new(FamilyKind::Pareto, vec![1.0, 2.0], Some(1.0)).is_err());
        assert!(FitFamily::new(FamilyKind::Pareto, vec![1.0], None).is_err());
        assert!(FitFamily::new(FamilyKind::TruncGamma, vec![1.0, 1.0], None).is_err());
        assert!(FitFamily::new(FamilyKind::TruncGamma, vec![1.0, 1.0], Some(-1.0)).is_err());
        assert!(FitFamily::new(FamilyKind::Normal, vec![0.0, 1.0], Some(1.0)).is_err());
        assert!(FitFamily::new(FamilyKind::Normal, vec![0.0, -1.0], None).is_err());
        assert!(FitFamily::new(FamilyKind::Gumbel, vec![-3.0, 1.0], None).is_ok());
    }

    #[test]
    fn densities_integrate_to_one() {
        for f in examples() {
            let lo = f.bound().unwrap_or(if f.kind().positive_support() { 0.0 } else { -60.0 });
            // integrate the bulk by quadrature, add the analytic tail mass
            let hi = f.quantile(1.0 - 1e-6).unwrap();
            // piecewise between quantiles so heavy tails keep their resolution
            let mut knots = vec![lo];
            for p in [0.5, 0.9, 0.99, 0.999, 0.9999, 0.99999] {
                knots.push(f.quantile(p).unwrap());
            }
            knots.push(hi);
            let bulk: f64 = knots.windows(2).map(|w| simpson(|x| f.pdf(x), w[0], w[1], 20_000)).sum();
            let total = bulk + f.sf(hi) + f.cdf(lo);
            assert!((total - 1.0).abs() < 1e-6, "{}: {total}", f.kind());
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for f in examples() {
            for &p in &[0.01, 0.25, 0.5, 0.9, 0.999] {
                let x = f.quantile(p).unwrap();
                assert!((f.cdf(x) - p).abs() < 1e-8, "{} p={p}: cdf={}", f.kind(), f.cdf(x));
            }
        }
    }

    #[test]
    fn truncated_loglik_is_untruncated_minus_mass() {
        use FamilyKind::*;
        let pairs = [
            (Lognormal, TruncLognormal, vec![1.0, 0.8]),
            (Weibull, TruncWeibull, vec![1.5, 2.0]),
            (Gamma, TruncGamma, vec![2.5, 1.5]),
            (Gumbel, TruncGumbel, vec![1.0, 0.7]),
            (Logistic, TruncLogistic, vec![1.0, 0.5]),
        ];
        let data = [1.3, 2.2, 4.0, 7.5, 1.1];
        for (plain, trunc, params) in pairs {
            let bound = 0.9;
            let p = FitFamily::new(plain, params.clone(), None).unwrap();
            let t = FitFamily::new(trunc, params, Some(bound)).unwrap();
            let expected = p.log_likelihood(&data) - data.len() as f64 * p.ln_sf(bound);
            assert!((t.log_likelihood(&data) - expected).abs() < 1e-8, "{trunc}");
        }
    }

    #[test]
    fn samples_respect_support() {
        for f in examples() {
            let xs = f.sample(&mut Stream::new(9), 2000).unwrap();
            if let Some(b) = f.bound() {
                assert!(xs.iter().all(|&x| x >= b), "{}", f.kind());
            }
            let mean_cdf = xs.iter().map(|&x| f.cdf(x)).sum::<f64>() / xs.len() as f64;
            assert!((mean_cdf - 0.5).abs() < 0.03, "{}: {mean_cdf}", f.kind());
        }
    }

    #[test]
    fn deep_tails_stay_finite() {
        let f = FitFamily::new(FamilyKind::TruncLognormal, vec![10.23, 2.0], Some(616_000.0)).unwrap();
        assert!(f.ln_pdf(1e9).is_finite());
        let x = f.quantile(0.5).unwrap();
        assert!(x > 616_000.0);
        let g = FitFamily::new(FamilyKind::TruncGumbel, vec![0.0, 1.0], Some(50.0)).unwrap();
        assert!(g.ln_pdf(51.0).is_finite());
    }
}
