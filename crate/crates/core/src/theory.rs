//! Distributional behaviour of the ensemble accuracy when member accuracies
//! are themselves random.
//!
//! With `p_1..p_n` iid with mean `mu` and profile `p_{n,k} = F(k/n)`, the
//! expected accuracy is the Bernstein polynomial of `F` at `mu`:
//!
//! ```text
//! E[q] = sum_k F(k/n) C(n,k) mu^k (1-mu)^(n-k)  ->  F(mu)   (n -> inf)
//! ```
//!
//! and for large `n` the variance is bounded by `F(mu) (1 - F(mu))`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::pnk::profile_from_cdf;
use crate::rng;
use crate::voting::CountAccumulator;

/// Largest `n` accepted by [`expected_accuracy`].
pub const EXPECTED_ACCURACY_MAX_N: usize = 100_000;

const BETA_CF_MAX_ITER: usize = 500;
const BETA_CF_EPS: f64 = 1e-15;

/// Accepted Beta shape parameters. Outside this range the log-gamma terms
/// lose all precision and the continued fraction stops converging within
/// its iteration cap.
pub const BETA_PARAM_RANGE: std::ops::RangeInclusive<f64> = 1e-4..=1e4;

/// A cumulative distribution function on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum CdfSpec {
    /// `F(y) = 0` for `y <= 1/2`, `1` otherwise. Matches the strict-majority
    /// profile.
    StepMajority,
    /// `F(y) = (2/pi) asin(sqrt(y))`, the Beta(1/2, 1/2) law.
    Arcsine,
    Beta { a: f64, b: f64 },
    /// Right-continuous step function through the given `(y, F(y))` points;
    /// `F = 0` left of the first point.
    EmpiricalStep(Vec<(f64, f64)>),
}

impl CdfSpec {
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        let spec = CdfSpec::Beta { a, b };
        spec.validate()?;
        Ok(spec)
    }

    /// Generalized arcsine law, Beta(1 - alpha, alpha).
    pub fn generalized_arcsine(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Validation(format!(
                "generalized arcsine parameter {alpha} must lie in (0, 1)"
            )));
        }
        Self::beta(1.0 - alpha, alpha)
    }

    /// Degenerate distribution with all mass at `mu`.
    pub fn point_mass(mu: f64) -> Result<Self> {
        let spec = CdfSpec::EmpiricalStep(vec![(mu, 1.0)]);
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CdfSpec::StepMajority | CdfSpec::Arcsine => Ok(()),
            CdfSpec::Beta { a, b } => {
                if *a <= 0.0 || *b <= 0.0 || a.is_nan() || b.is_nan() {
                    Err(Error::Validation(format!("Beta parameters must be positive, got ({a}, {b})")))
                } else if !BETA_PARAM_RANGE.contains(a) || !BETA_PARAM_RANGE.contains(b) {
                    Err(Error::Validation(format!(
                        "Beta parameters must lie in [{}, {}], got ({a}, {b})",
                        BETA_PARAM_RANGE.start(),
                        BETA_PARAM_RANGE.end()
                    )))
                } else {
                    Ok(())
                }
            }
            CdfSpec::EmpiricalStep(points) => {
                if points.is_empty() {
                    return Err(Error::Validation("empirical CDF needs at least one point".into()));
                }
                let mut prev: Option<(f64, f64)> = None;
                for &(y, f) in points {
                    if !(0.0..=1.0).contains(&y) || !(0.0..=1.0).contains(&f) {
                        return Err(Error::Validation(format!(
                            "empirical CDF point ({y}, {f}) lies outside [0, 1]^2"
                        )));
                    }
                    if let Some((py, pf)) = prev {
                        if y <= py || f < pf {
                            return Err(Error::Validation(
                                "empirical CDF points must have increasing y and nondecreasing F"
                                    .into(),
                            ));
                        }
                    }
                    prev = Some((y, f));
                }
                if points[points.len() - 1].1 != 1.0 {
                    return Err(Error::Validation("empirical CDF must reach F = 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Evaluates `F(y)`; `y` must lie in `[0, 1]`.
    pub fn eval(&self, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&y) {
            return Err(invalid(format!("CDF argument {y} is outside [0, 1]")));
        }
        self.validate()?;
        Ok(self.eval_unchecked(y))
    }

    pub(crate) fn eval_unchecked(&self, y: f64) -> f64 {
        match self {
            CdfSpec::StepMajority => {
                if y > 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            CdfSpec::Arcsine => (std::f64::consts::FRAC_2_PI * y.sqrt().asin()).clamp(0.0, 1.0),
            CdfSpec::Beta { a, b } => regularized_incomplete_beta(*a, *b, y)
                .unwrap_or(f64::NAN)
                .clamp(0.0, 1.0),
            CdfSpec::EmpiricalStep(points) => {
                let idx = points.partition_point(|&(py, _)| py <= y);
                if idx == 0 {
                    0.0
                } else {
                    points[idx - 1].1
                }
            }
        }
    }

    /// Mean and variance of the distribution.
    pub fn moments(&self) -> MomentSummary {
        let (mu, sigma2) = match self {
            CdfSpec::StepMajority => (0.5, 0.0),
            CdfSpec::Arcsine => (0.5, 0.125),
            CdfSpec::Beta { a, b } => {
                let s = a + b;
                (a / s, a * b / (s * s * (s + 1.0)))
            }
            CdfSpec::EmpiricalStep(points) => {
                let mut prev = 0.0;
                let (mut m1, mut m2) = (0.0, 0.0);
                for &(y, f) in points {
                    let w = f - prev;
                    m1 += w * y;
                    m2 += w * y * y;
                    prev = f;
                }
                (m1, (m2 - m1 * m1).max(0.0))
            }
        };
        MomentSummary { mu, sigma2 }
    }

    pub fn mean(&self) -> f64 {
        self.moments().mu
    }

    /// Draws one value from the distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            CdfSpec::StepMajority => 0.5,
            CdfSpec::Arcsine => {
                let u: f64 = rng.gen();
                let s = (std::f64::consts::FRAC_PI_2 * u).sin();
                s * s
            }
            CdfSpec::Beta { a, b } => rand_distr::Beta::new(*a, *b)
                .expect("validated Beta parameters")
                .sample(rng),
            CdfSpec::EmpiricalStep(points) => {
                // u in (0, 1]; smallest point whose F reaches u.
                let u = 1.0 - rng.gen::<f64>();
                let idx = points.partition_point(|&(_, f)| f < u);
                points[idx.min(points.len() - 1)].0
            }
        }
    }
}

impl fmt::Display for CdfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CdfSpec::StepMajority => f.write_str("step"),
            CdfSpec::Arcsine => f.write_str("arcsine"),
            CdfSpec::Beta { a, b } => write!(f, "beta:{a}:{b}"),
            CdfSpec::EmpiricalStep(points) => {
                if let [(mu, fv)] = points.as_slice() {
                    if *fv == 1.0 {
                        return write!(f, "point:{mu}");
                    }
                }
                f.write_str("empirical:")?;
                for (i, (y, fv)) in points.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{y}={fv}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_number(text: &str, what: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Validation(format!("{what}: {text:?} is not a finite number")))
}

/// Accepted forms of a CDF string.
pub const CDF_FORMS: &str =
    "step | arcsine | beta:<a>:<b> | genarcsine:<alpha> | point:<mu> | empirical:<y>=<F>,...";

impl FromStr for CdfSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.splitn(2, ':');
        let head = parts.next().unwrap_or_default();
        let rest = parts.next();
        let spec = match (head, rest) {
            ("step", None) => CdfSpec::StepMajority,
            ("arcsine", None) => CdfSpec::Arcsine,
            ("beta", Some(rest)) => {
                let (a, b) = rest.split_once(':').ok_or_else(|| {
                    Error::Usage(format!("beta CDF needs two parameters; valid forms: {CDF_FORMS}"))
                })?;
                CdfSpec::Beta {
                    a: parse_number(a, "Beta a")?,
                    b: parse_number(b, "Beta b")?,
                }
            }
            ("genarcsine", Some(alpha)) => {
                return CdfSpec::generalized_arcsine(parse_number(alpha, "alpha")?)
            }
            ("point", Some(mu)) => CdfSpec::EmpiricalStep(vec![(parse_number(mu, "point mass")?, 1.0)]),
            ("empirical", Some(rest)) => {
                let points = rest
                    .split(',')
                    .map(|pair| {
                        let (y, f) = pair.split_once('=').ok_or_else(|| {
                            Error::Usage(format!("empirical point {pair:?} must look like y=F"))
                        })?;
                        Ok((parse_number(y, "empirical y")?, parse_number(f, "empirical F")?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                CdfSpec::EmpiricalStep(points)
            }
            _ => {
                return Err(Error::Usage(format!(
                    "unknown CDF {s:?}; valid forms: {CDF_FORMS}"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for CdfSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CdfSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Mean and variance of the member-accuracy distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSummary {
    pub mu: f64,
    pub sigma2: f64,
}

impl MomentSummary {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(invalid(format!("mean {mu} is outside [0, 1]")));
        }
        if !(sigma2 >= 0.0 && sigma2 <= mu * (1.0 - mu)) {
            return Err(Error::InfeasibleMoments {
                variance: sigma2,
                bound: mu * (1.0 - mu),
            });
        }
        Ok(MomentSummary { mu, sigma2 })
    }

    /// Sample mean and unbiased sample variance.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(invalid("at least two samples are required"));
        }
        if let Some(v) = samples.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid(format!("sample {v} is outside [0, 1]")));
        }
        let n = samples.len() as f64;
        let mu = samples.iter().sum::<f64>() / n;
        let ss: f64 = samples.iter().map(|v| (v - mu) * (v - mu)).sum();
        Ok(MomentSummary {
            mu,
            sigma2: ss / (n - 1.0),
        })
    }
}

/// Regularized incomplete beta function `I_x(a, b)`, by the continued
/// fraction (modified Lentz) with the symmetry `I_x(a,b) = 1 - I_{1-x}(b,a)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid(format!("Beta parameters must be positive, got ({a}, {b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("incomplete beta argument {x} is outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - beta_continued_fraction(b, a, 1.0 - x)?)
    } else {
        beta_continued_fraction(a, b, x)
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp() / a;

    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < BETA_CF_EPS {
            return Ok(front * h);
        }
    }
    Err(invalid(format!(
        "incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )))
}

/// `F(y)` for a CDF spec.
pub fn cdf_eval(cdf: &CdfSpec, y: f64) -> Result<f64> {
    cdf.eval(y)
}

/// Binomial(n, mu) probability masses, computed by ratio updates outward from
/// the mode and normalized, so nothing overflows or underflows at the mode.
pub(crate) fn binomial_masses(n: usize, mu: f64) -> Vec<f64> {
    let mut mass = vec![0.0; n + 1];
    if mu <= 0.0 {
        mass[0] = 1.0;
        return mass;
    }
    if mu >= 1.0 {
        mass[n] = 1.0;
        return mass;
    }
    let ratio = mu / (1.0 - mu);
    let mode = (((n + 1) as f64) * mu).floor().min(n as f64) as usize;
    mass[mode] = 1.0;
    for k in mode..n {
        mass[k + 1] = mass[k] * ((n - k) as f64 / (k + 1) as f64) * ratio;
    }
    for k in (1..=mode).rev() {
        mass[k - 1] = mass[k] * (k as f64 / (n - k + 1) as f64) / ratio;
    }
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    mass
}

/// Neumaier summation.
fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for t in terms {
        let next = sum + t;
        carry += if sum.abs() >= t.abs() { (sum - next) + t } else { (t - next) + sum };
        sum = next;
    }
    sum + carry
}

fn check_mu(mu: f64) -> Result<()> {
    if (0.0..=1.0).contains(&mu) {
        Ok(())
    } else {
        Err(invalid(format!("mean accuracy {mu} is outside [0, 1]")))
    }
}

/// Expected ensemble accuracy `sum_k F(k/n) C(n,k) mu^k (1-mu)^(n-k)` for iid
/// member accuracies with mean `mu` and profile `F(k/n)`.
pub fn expected_accuracy(cdf: &CdfSpec, mu: f64, n: usize) -> Result<f64> {
    check_mu(mu)?;
    cdf.validate()?;
    if n == 0 {
        return Err(invalid("ensemble size must be positive"));
    }
    if n > EXPECTED_ACCURACY_MAX_N {
        return Err(Error::SizeLimit {
            what: "ensemble size",
            limit: EXPECTED_ACCURACY_MAX_N as u64,
            got: n as u64,
        });
    }
    let mass = binomial_masses(n, mu);
    let nf = n as f64;
    let terms = mass
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(k, m)| m * cdf.eval_unchecked(k as f64 / nf));
    Ok(compensated_sum(terms).clamp(0.0, 1.0))
}

/// Large-`n` limit of [`expected_accuracy`], namely `F(mu)`.
pub fn asymptotic_accuracy(cdf: &CdfSpec, mu: f64) -> Result<f64> {
    cdf.eval(mu)
}

/// Large-`n` upper bound on the variance of the ensemble accuracy,
/// `F(mu) (1 - F(mu))`.
pub fn variance_bound(cdf: &CdfSpec, mu: f64) -> Result<f64> {
    let f = cdf.eval(mu)?;
    Ok(f * (1.0 - f))
}

/// Method-of-moments Beta fit to samples in `[0, 1]`.
pub fn beta_fit_moments(samples: &[f64]) -> Result<CdfSpec> {
    let MomentSummary { mu, sigma2 } = MomentSummary::from_samples(samples)?;
    beta_from_moments(mu, sigma2)
}

/// Beta distribution with the given mean and variance.
pub fn beta_from_moments(mu: f64, sigma2: f64) -> Result<CdfSpec> {
    if sigma2 == 0.0 {
        return Err(Error::DegenerateSample);
    }
    let bound = mu * (1.0 - mu);
    if !(sigma2 < bound) {
        return Err(Error::InfeasibleMoments {
            variance: sigma2,
            bound,
        });
    }
    let common = bound / sigma2 - 1.0;
    CdfSpec::beta(mu * common, (1.0 - mu) * common)
}

/// Monte-Carlo summary of the ensemble accuracy over random member
/// accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSummary {
    pub draws: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub mean_std_error: f64,
    /// Large-sample standard error of the variance estimate,
    /// `sqrt((m4 - s^4) / draws)`.
    pub variance_std_error: f64,
}

/// Draws `p_1..p_n` iid from `accuracy_cdf`, evaluates the accuracy under the
/// profile `F(k/n)` from `profile_cdf`, and summarizes `draws` repetitions.
pub fn sample_ensemble_accuracy(
    accuracy_cdf: &CdfSpec,
    n: usize,
    profile_cdf: &CdfSpec,
    draws: u64,
    seed: u64,
) -> Result<SampleSummary> {
    if draws < 2 {
        return Err(invalid("at least two draws are required"));
    }
    accuracy_cdf.validate()?;
    let profile = profile_from_cdf(n, profile_cdf)?;
    let coefficients = profile.coefficients();

    let values: Vec<f64> = rng::batched(draws, seed, |rng, count| {
        (0..count)
            .map(|_| {
                let mut acc = CountAccumulator::with_capacity(n);
                for _ in 0..n {
                    acc.push(accuracy_cdf.sample(rng));
                }
                acc.expect(coefficients)
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();

    // Welford keeps a constant sequence at exactly zero spread.
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let m = draws as f64;
    let m4: f64 = values.iter().map(|v| (v - mean).powi(4)).sum();
    let variance = m2 / (m - 1.0);
    let pop_var = m2 / m;
    let m4 = m4 / m;
    Ok(SampleSummary {
        draws,
        mean,
        variance,
        mean_std_error: (variance / m).sqrt(),
        variance_std_error: ((m4 - pop_var * pop_var).max(0.0) / m).sqrt(),
    })
}
