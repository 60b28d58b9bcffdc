//! Ensemble accuracy under classical and generalized majority voting.
//!
//! Members are modelled as independent Bernoulli voters: member `i` is
//! correct with probability `p_i`. The number of correct votes then follows a
//! Poisson-binomial law, and the ensemble accuracy is the expectation of a
//! [`VotingProfile`] over that law:
//!
//! ```text
//! q = sum_k  p_{n,k} * P(exactly k of n members correct)
//! ```
//!
//! Classical majority voting is the 0/1 step profile `p_{n,k} = [k > n/2]`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest ensemble accepted by [`q_bruteforce_oracle`].
pub const BRUTEFORCE_MAX_MEMBERS: usize = 20;

/// One candidate ensemble member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Classifier {
    pub id: String,
    /// Probability of an individually correct decision.
    pub accuracy: f64,
    /// Execution cost, in arbitrary but consistent units.
    pub time: f64,
}

impl Classifier {
    pub fn new(id: impl Into<String>, accuracy: f64, time: f64) -> Result<Self> {
        let c = Classifier {
            id: id.into(),
            accuracy,
            time,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Validation("classifier id must be nonempty".into()));
        }
        if !(0.0..=1.0).contains(&self.accuracy) {
            return Err(Error::Validation(format!(
                "classifier {:?}: field \"accuracy\" = {} is outside [0, 1]",
                self.id, self.accuracy
            )));
        }
        if !(self.time >= 0.0 && self.time.is_finite()) {
            return Err(Error::Validation(format!(
                "classifier {:?}: field \"time\" = {} must be a finite nonnegative number",
                self.id, self.time
            )));
        }
        Ok(())
    }
}

/// An ordered, nonempty set of classifiers with distinct ids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierPool {
    members: Vec<Classifier>,
}

impl ClassifierPool {
    pub fn new(members: Vec<Classifier>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Validation("pool must contain at least one classifier".into()));
        }
        let mut seen = HashSet::with_capacity(members.len());
        for c in &members {
            c.validate()?;
            if !seen.insert(c.id.as_str()) {
                return Err(Error::Validation(format!("duplicate classifier id {:?}", c.id)));
            }
        }
        Ok(ClassifierPool { members })
    }

    pub fn members(&self) -> &[Classifier] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.members.iter().position(|c| c.id == id)
    }

    pub fn get(&self, id: &str) -> Option<&Classifier> {
        self.members.iter().find(|c| c.id == id)
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.members.iter().map(|c| c.accuracy).collect()
    }

    pub fn total_time(&self) -> f64 {
        self.members.iter().map(|c| c.time).sum()
    }
}

/// Conditional probabilities `p_{n,0..=n}` of a correct ensemble decision
/// given that exactly `k` of the `n` members voted correctly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VotingProfile {
    coefficients: Vec<f64>,
}

impl VotingProfile {
    /// Builds a profile, requiring every coefficient in `[0, 1]` and the
    /// sequence to be nondecreasing.
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        let profile = Self::new_unordered(coefficients)?;
        if let Some(k) = profile.first_decrease() {
            return Err(invalid(format!(
                "profile coefficients must be nondecreasing; p[{}] = {} > p[{}] = {}",
                k - 1,
                profile.coefficients[k - 1],
                k,
                profile.coefficients[k]
            )));
        }
        Ok(profile)
    }

    /// Like [`VotingProfile::new`] but without the ordering requirement.
    ///
    /// Used for coefficient tables whose monotonicity is not guaranteed and
    /// is reported separately.
    pub fn new_unordered(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(invalid("a profile needs n + 1 >= 2 coefficients"));
        }
        if let Some((k, v)) = coefficients
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(invalid(format!("profile coefficient p[{k}] = {v} is outside [0, 1]")));
        }
        Ok(VotingProfile { coefficients })
    }

    /// Ensemble size the profile is defined for.
    pub fn n(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn is_monotone(&self) -> bool {
        self.first_decrease().is_none()
    }

    fn first_decrease(&self) -> Option<usize> {
        self.coefficients
            .windows(2)
            .position(|w| w[1] < w[0])
            .map(|i| i + 1)
    }
}

/// Probability mass of the number of correct members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountDistribution {
    mass: Vec<f64>,
}

impl CountDistribution {
    pub fn n(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `P(at least min_correct members correct)`.
    pub fn tail(&self, min_correct: usize) -> f64 {
        self.mass.iter().skip(min_correct).sum()
    }

    /// Expectation of `profile` under this distribution.
    pub fn expect(&self, profile: &VotingProfile) -> Result<f64> {
        if profile.n() != self.n() {
            return Err(invalid(format!(
                "profile is sized for {} members but the ensemble has {}",
                profile.n(),
                self.n()
            )));
        }
        Ok(self.expect_unchecked(profile.coefficients()))
    }

    pub(crate) fn expect_unchecked(&self, coefficients: &[f64]) -> f64 {
        let q: f64 = self
            .mass
            .iter()
            .zip(coefficients)
            .map(|(m, p)| m * p)
            .sum();
        q.clamp(0.0, 1.0)
    }
}

/// Incrementally built Poisson-binomial mass. Adding a member is O(n).
#[derive(Debug, Clone)]
pub(crate) struct CountAccumulator {
    mass: Vec<f64>,
}

impl CountAccumulator {
    pub(crate) fn new() -> Self {
        CountAccumulator { mass: vec![1.0] }
    }

    pub(crate) fn with_capacity(n: usize) -> Self {
        let mut mass = Vec::with_capacity(n + 1);
        mass.push(1.0);
        CountAccumulator { mass }
    }

    pub(crate) fn push(&mut self, p: f64) {
        let q = 1.0 - p;
        self.mass.push(0.0);
        for k in (1..self.mass.len()).rev() {
            self.mass[k] = self.mass[k] * q + self.mass[k - 1] * p;
        }
        self.mass[0] *= q;
    }

    pub(crate) fn members(&self) -> usize {
        self.mass.len() - 1
    }

    pub(crate) fn expect(&self, coefficients: &[f64]) -> f64 {
        debug_assert_eq!(coefficients.len(), self.mass.len());
        let q: f64 = self
            .mass
            .iter()
            .zip(coefficients)
            .map(|(m, p)| m * p)
            .sum();
        q.clamp(0.0, 1.0)
    }

    pub(crate) fn finish(self) -> CountDistribution {
        CountDistribution { mass: self.mass }
    }
}

fn check_accuracies(accuracies: &[f64]) -> Result<()> {
    if accuracies.is_empty() {
        return Err(invalid("accuracy sequence is empty"));
    }
    if let Some((i, p)) = accuracies
        .iter()
        .enumerate()
        .find(|(_, p)| !(0.0..=1.0).contains(*p))
    {
        return Err(invalid(format!("accuracy[{i}] = {p} is outside [0, 1]")));
    }
    Ok(())
}

/// Poisson-binomial distribution of the number of correct members, built by
/// adding one member at a time (O(n^2)).
pub fn success_count_distribution(accuracies: &[f64]) -> Result<CountDistribution> {
    check_accuracies(accuracies)?;
    let mut acc = CountAccumulator::with_capacity(accuracies.len());
    for &p in accuracies {
        acc.push(p);
    }
    Ok(acc.finish())
}

/// Smallest number of correct votes forming a strict majority of `n`.
pub fn strict_majority(n: usize) -> usize {
    n / 2 + 1
}

/// Classical majority-vote accuracy: probability that more than half of the
/// members are correct.
///
/// For even `n` an exact half/half split counts as a failure, which is the
/// same convention as [`crate::pnk::classical_profile`]. Use
/// [`q_at_least`] with `n.div_ceil(2)` to count ties as successes instead.
pub fn q_binary(accuracies: &[f64]) -> Result<f64> {
    let dist = success_count_distribution(accuracies)?;
    Ok(dist.tail(strict_majority(accuracies.len())).clamp(0.0, 1.0))
}

/// Probability that at least `min_correct` members are correct.
pub fn q_at_least(accuracies: &[f64], min_correct: usize) -> Result<f64> {
    let dist = success_count_distribution(accuracies)?;
    Ok(dist.tail(min_correct).clamp(0.0, 1.0))
}

/// Generalized majority-vote accuracy `sum_k p_{n,k} P(K = k)`.
pub fn q_multi(accuracies: &[f64], profile: &VotingProfile) -> Result<f64> {
    let dist = success_count_distribution(accuracies)?;
    dist.expect(profile)
}

/// Literal evaluation of the generalized accuracy by summing over all `2^n`
/// subsets of correct members. Test oracle only.
pub fn q_bruteforce_oracle(accuracies: &[f64], profile: &VotingProfile) -> Result<f64> {
    let n = accuracies.len();
    if n > BRUTEFORCE_MAX_MEMBERS {
        return Err(Error::SizeLimit {
            what: "brute-force ensemble size",
            limit: BRUTEFORCE_MAX_MEMBERS as u64,
            got: n as u64,
        });
    }
    check_accuracies(accuracies)?;
    if profile.n() != n {
        return Err(invalid(format!(
            "profile is sized for {} members but the ensemble has {n}",
            profile.n()
        )));
    }
    let coefficients = profile.coefficients();
    let mut total = 0.0;
    for mask in 0u32..(1u32 << n) {
        let mut prob = 1.0;
        for (i, &p) in accuracies.iter().enumerate() {
            prob *= if mask & (1 << i) != 0 { p } else { 1.0 - p };
        }
        total += coefficients[mask.count_ones() as usize] * prob;
    }
    Ok(total)
}
