//! Multiclass tie-break coefficients `p_{n,k}(d)` and voting-profile
//! construction.
//!
//! `p_{n,k}(d)` is the probability that a plurality vote over `d` classes
//! picks the true class when `k` of the `n` voters are correct. It is
//! available two ways:
//!
//! * [`pnk_closed_form`]: the multinomial closed formula
//!   `d^-(n-k) * sum_{x in [0,k]^d, |x| = n-k} multinomial(n-k; x) / alpha_k(x)`
//!   with `alpha_k(x) = #{i : x_i = k} + 1`, evaluated in exact rationals.
//! * [`pnk_monte_carlo`]: plurality voting simulated under an explicit model
//!   for where the `n - k` incorrect votes land.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::theory::CdfSpec;
use crate::voting::{strict_majority, VotingProfile};

pub const PNK_MAX_N: usize = 30;
pub const PNK_MAX_D: usize = 8;
pub const DEFAULT_MAX_COMPOSITIONS: u64 = 10_000_000;

/// Ensemble size `n`, class count `d` and number of correct votes `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PnkRequest {
    pub n: usize,
    pub k: usize,
    pub d: usize,
}

impl PnkRequest {
    pub fn new(n: usize, k: usize, d: usize) -> Result<Self> {
        let req = PnkRequest { n, k, d };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("ensemble size n must be positive"));
        }
        if self.d < 2 {
            return Err(invalid(format!("class count d = {} must be at least 2", self.d)));
        }
        if self.k > self.n {
            return Err(invalid(format!("k = {} exceeds n = {}", self.k, self.n)));
        }
        Ok(())
    }

    fn residual(&self) -> usize {
        self.n - self.k
    }
}

/// Distribution of `total` incorrect votes over `parts` classes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Composition {
    pub parts: Vec<usize>,
}

/// Streams every vector of `parts` integers in `[0, cap_per_part]` summing to
/// `total`, in descending lexicographic order (the first vector front-loads
/// the total).
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<usize>>,
    cap: usize,
}

pub fn enumerate_compositions(total: usize, parts: usize, cap_per_part: usize) -> Compositions {
    let feasible = parts >= 1 && (total == 0 || cap_per_part.checked_mul(parts).is_none_or(|m| m >= total));
    let current = feasible.then(|| {
        let mut v = vec![0; parts];
        fill_greedy(&mut v, total, cap_per_part);
        v
    });
    Compositions {
        current,
        cap: cap_per_part,
    }
}

fn fill_greedy(slots: &mut [usize], mut remaining: usize, cap: usize) {
    for s in slots {
        let take = remaining.min(cap);
        *s = take;
        remaining -= take;
    }
    debug_assert_eq!(remaining, 0);
}

impl Iterator for Compositions {
    type Item = Composition;

    fn next(&mut self) -> Option<Composition> {
        let current = self.current.take()?;
        let out = Composition {
            parts: current.clone(),
        };

        // Predecessor in lexicographic order: decrement the rightmost slot
        // whose suffix can absorb one more unit, then refill the suffix
        // greedily.
        let mut next = current;
        let len = next.len();
        let mut suffix_sum = next[len - 1];
        for i in (0..len.saturating_sub(1)).rev() {
            let suffix_len = len - i - 1;
            if next[i] > 0 && suffix_sum < self.cap * suffix_len {
                next[i] -= 1;
                fill_greedy(&mut next[i + 1..], suffix_sum + 1, self.cap);
                self.current = Some(next);
                break;
            }
            suffix_sum += next[i];
        }
        Some(out)
    }
}

/// Number of compositions, i.e. the `z^total` coefficient of
/// `(1 + z + ... + z^cap)^parts`, by direct polynomial multiplication.
pub fn count_compositions(total: usize, parts: usize, cap_per_part: usize) -> u128 {
    let mut poly = vec![0u128; total + 1];
    poly[0] = 1;
    for _ in 0..parts {
        let mut next = vec![0u128; total + 1];
        for (i, &c) in poly.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for j in 0..=cap_per_part.min(total - i) {
                next[i + j] += c;
            }
        }
        poly = next;
    }
    poly[total]
}

/// Exact and rounded value of a tie-break coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PnkValue {
    pub exact: BigRational,
    pub value: f64,
}

impl Serialize for PnkValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("PnkValue", 2)?;
        s.serialize_field("exact", &format_rational(&self.exact))?;
        s.serialize_field("value", &self.value)?;
        s.end()
    }
}

/// `num/den`, or just `num` for integers.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn factorials(upto: usize) -> Vec<BigUint> {
    let mut f = Vec::with_capacity(upto + 1);
    f.push(BigUint::one());
    for i in 1..=upto {
        let next = &f[i - 1] * BigUint::from(i);
        f.push(next);
    }
    f
}

/// `p_{n,k}(d)` by the closed multinomial formula, with the default
/// composition cap.
pub fn pnk_closed_form(req: PnkRequest) -> Result<PnkValue> {
    pnk_closed_form_with_cap(req, DEFAULT_MAX_COMPOSITIONS)
}

pub fn pnk_closed_form_with_cap(req: PnkRequest, max_compositions: u64) -> Result<PnkValue> {
    req.validate()?;
    if req.n > PNK_MAX_N {
        return Err(invalid(format!("n = {} exceeds the formula limit {PNK_MAX_N}", req.n)));
    }
    if req.d > PNK_MAX_D {
        return Err(invalid(format!("d = {} exceeds the formula limit {PNK_MAX_D}", req.d)));
    }
    let residual = req.residual();
    let count = count_compositions(residual, req.d, req.k);
    if count > max_compositions as u128 {
        return Err(Error::SizeLimit {
            what: "composition count",
            limit: max_compositions,
            got: u64::try_from(count).unwrap_or(u64::MAX),
        });
    }

    let fact = factorials(residual);
    // Group multinomials by alpha so only d + 1 rational divisions happen.
    let mut by_alpha = vec![BigUint::zero(); req.d + 2];
    for comp in enumerate_compositions(residual, req.d, req.k) {
        let denom = comp
            .parts
            .iter()
            .fold(BigUint::one(), |acc, &x| acc * &fact[x]);
        let multinomial = &fact[residual] / denom;
        let alpha = comp.parts.iter().filter(|&&x| x == req.k).count() + 1;
        by_alpha[alpha] += multinomial;
    }

    let mut sum = BigRational::zero();
    for (alpha, total) in by_alpha.into_iter().enumerate().skip(1) {
        if !total.is_zero() {
            sum += BigRational::new(total.into(), BigUint::from(alpha).into());
        }
    }
    let scale: BigUint = BigUint::from(req.d).pow(residual as u32);
    let exact = sum / BigRational::from_integer(scale.into());
    let value = exact.to_f64().unwrap_or(f64::NAN);
    Ok(PnkValue { exact, value })
}

/// Where the `n - k` incorrect votes land in a simulated plurality vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerativeModel {
    /// Uniformly on any of the `d` classes, the true one included.
    ResidualOverAllClasses,
    /// Uniformly on one of the `d - 1` wrong classes.
    ResidualOverWrongClasses,
}

impl GenerativeModel {
    pub fn label(&self) -> &'static str {
        match self {
            GenerativeModel::ResidualOverAllClasses => "all",
            GenerativeModel::ResidualOverWrongClasses => "wrong",
        }
    }
}

impl fmt::Display for GenerativeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for GenerativeModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(GenerativeModel::ResidualOverAllClasses),
            "wrong" => Ok(GenerativeModel::ResidualOverWrongClasses),
            _ => Err(Error::Usage(format!("unknown model {s:?}; expected \"wrong\" or \"all\""))),
        }
    }
}

/// A Monte-Carlo proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub trials: u64,
    pub successes: f64,
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    pub(crate) fn from_successes(successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        McEstimate {
            trials,
            successes: successes as f64,
            estimate: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }
}

/// Plurality vote outcome: does the true class (index 0) win once ties are
/// broken uniformly? `tally[0]` is the true class.
pub(crate) fn true_class_wins<R: Rng + ?Sized>(tally: &[u32], rng: &mut R) -> bool {
    let truth = tally[0];
    let mut tied = 1u32;
    for &t in &tally[1..] {
        if t > truth {
            return false;
        }
        if t == truth {
            tied += 1;
        }
    }
    tied == 1 || rng.gen_range(0..tied) == 0
}

/// Casts one incorrect vote according to `model`; returns the class index.
pub(crate) fn residual_vote<R: Rng + ?Sized>(model: GenerativeModel, d: usize, rng: &mut R) -> usize {
    match model {
        GenerativeModel::ResidualOverAllClasses => rng.gen_range(0..d),
        GenerativeModel::ResidualOverWrongClasses => 1 + rng.gen_range(0..d - 1),
    }
}

/// Simulated `p_{n,k}(d)`: the true class starts with `k` votes, the other
/// `n - k` are cast per `model`, and the plurality winner is compared to the
/// truth.
pub fn pnk_monte_carlo(
    req: PnkRequest,
    model: GenerativeModel,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    req.validate()?;
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let residual = req.residual();
    let wins: u64 = rng::batched(trials, seed, |rng, count| {
        let mut tally = vec![0u32; req.d];
        let mut wins = 0u64;
        for _ in 0..count {
            tally.fill(0);
            tally[0] = req.k as u32;
            for _ in 0..residual {
                tally[residual_vote(model, req.d, rng)] += 1;
            }
            if true_class_wins(&tally, rng) {
                wins += 1;
            }
        }
        wins
    })
    .into_iter()
    .sum();
    Ok(McEstimate::from_successes(wins, trials))
}

/// Classical majority step profile: `p_{n,k} = 1` iff `k > floor(n/2)`.
pub fn classical_profile(n: usize) -> Result<VotingProfile> {
    if n == 0 {
        return Err(invalid("ensemble size n must be positive"));
    }
    let threshold = strict_majority(n);
    VotingProfile::new((0..=n).map(|k| if k >= threshold { 1.0 } else { 0.0 }).collect())
}

/// Profile `p_{n,k} = F(k/n)`.
pub fn profile_from_cdf(n: usize, cdf: &CdfSpec) -> Result<VotingProfile> {
    if n == 0 {
        return Err(invalid("ensemble size n must be positive"));
    }
    cdf.validate()?;
    let nf = n as f64;
    VotingProfile::new((0..=n).map(|k| cdf.eval_unchecked(k as f64 / nf)).collect())
}

/// Profile assembled from the closed-form coefficients `p_{n,k}(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PnkProfile {
    pub profile: VotingProfile,
    pub exact: Vec<BigRational>,
    /// One entry per `k` where `p_{n,k}(d) < p_{n,k-1}(d)`.
    pub warnings: Vec<String>,
}

pub fn profile_from_pnk(n: usize, d: usize) -> Result<PnkProfile> {
    let mut exact = Vec::with_capacity(n + 1);
    let mut coefficients = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let v = pnk_closed_form(PnkRequest::new(n, k, d)?)?;
        coefficients.push(v.value);
        exact.push(v.exact);
    }
    let warnings = exact
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] < w[0])
        .map(|(i, w)| {
            format!(
                "p_{{{n},{}}}({d}) = {} is below p_{{{n},{}}}({d}) = {}",
                i + 1,
                format_rational(&w[1]),
                i,
                format_rational(&w[0])
            )
        })
        .collect();
    Ok(PnkProfile {
        profile: VotingProfile::new_unordered(coefficients)?,
        exact,
        warnings,
    })
}
