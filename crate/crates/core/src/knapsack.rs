//! Ensemble selection under a total execution-time budget.
//!
//! Maximize the voting accuracy of a subset of the pool subject to
//! `sum t_i <= T`, with each classifier used at most once. The objective is
//! neither linear nor separable in the members, so there is no dynamic
//! programming shortcut: [`solve_exhaustive`] walks every feasible subset and
//! [`solve_stochastic`] runs randomized greedy constructions in which more
//! efficient items are more likely to be picked.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::pnk::{classical_profile, profile_from_cdf, profile_from_pnk, PNK_MAX_N};
use crate::rng;
use crate::theory::CdfSpec;
use crate::voting::{q_multi, ClassifierPool, CountAccumulator, VotingProfile};

pub const EXHAUSTIVE_MAX_ITEMS: usize = 25;
pub const DEFAULT_MAX_COPIES: usize = 51;
/// Efficiencies of useful items cluster near 1, so selection weights need a
/// steep exponent to tell them apart.
pub const DEFAULT_WEIGHT_EXPONENT: f64 = 10.0;
/// Restarts inspected by [`StopRule::ImprovementProbability`].
pub const IMPROVEMENT_WINDOW: usize = 50;

/// Source of the voting profile for an ensemble of a given size.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Classical,
    Cdf(CdfSpec),
    /// Closed-form multiclass coefficients for `d` classes.
    Pnk(usize),
}

impl Scheme {
    pub fn profile(&self, n: usize) -> Result<VotingProfile> {
        match self {
            Scheme::Classical => classical_profile(n),
            Scheme::Cdf(cdf) => profile_from_cdf(n, cdf),
            Scheme::Pnk(d) => Ok(profile_from_pnk(n, *d)?.profile),
        }
    }

    /// Largest ensemble the scheme can build a profile for.
    pub fn max_members(&self) -> usize {
        match self {
            Scheme::Pnk(_) => PNK_MAX_N,
            _ => usize::MAX,
        }
    }
}

/// Accepted scheme strings.
pub const SCHEME_FORMS: &str = "classical | cdf:arcsine | cdf:step | cdf:beta:<a>:<b> | pnk:<d>";

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "classical" {
            return Ok(Scheme::Classical);
        }
        if let Some(cdf) = s.strip_prefix("cdf:") {
            return match cdf.parse::<CdfSpec>() {
                Ok(spec) => Ok(Scheme::Cdf(spec)),
                Err(Error::Usage(_)) => Err(Error::Usage(format!(
                    "unknown scheme {s:?}; valid forms: {SCHEME_FORMS}"
                ))),
                Err(e) => Err(e),
            };
        }
        if let Some(d) = s.strip_prefix("pnk:") {
            let d: usize = d.parse().map_err(|_| {
                Error::Usage(format!("pnk scheme needs an integer class count, got {d:?}"))
            })?;
            if d < 2 {
                return Err(Error::Validation(format!("class count {d} must be at least 2")));
            }
            return Ok(Scheme::Pnk(d));
        }
        Err(Error::Usage(format!("unknown scheme {s:?}; valid forms: {SCHEME_FORMS}")))
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Classical => f.write_str("classical"),
            Scheme::Cdf(cdf) => write!(f, "cdf:{cdf}"),
            Scheme::Pnk(d) => write!(f, "pnk:{d}"),
        }
    }
}

impl Serialize for Scheme {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// When the stochastic solver stops restarting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    FixedRestarts,
    /// Stop once fewer than this fraction of the last
    /// [`IMPROVEMENT_WINDOW`] restarts improved the incumbent. A heuristic.
    ImprovementProbability(f64),
}

impl fmt::Display for StopRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopRule::FixedRestarts => f.write_str("fixed"),
            StopRule::ImprovementProbability(eps) => write!(f, "improve:{eps}"),
        }
    }
}

impl FromStr for StopRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "fixed" {
            return Ok(StopRule::FixedRestarts);
        }
        if let Some(eps) = s.strip_prefix("improve:") {
            let eps: f64 = eps
                .parse()
                .map_err(|_| Error::Usage(format!("bad improvement threshold {eps:?}")))?;
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::Validation(format!(
                    "improvement threshold {eps} must lie in (0, 1]"
                )));
            }
            return Ok(StopRule::ImprovementProbability(eps));
        }
        Err(Error::Usage(format!("unknown stop rule {s:?}; expected fixed | improve:<eps>")))
    }
}

#[derive(Debug, Clone)]
pub struct SolveRequest {
    pub pool: ClassifierPool,
    pub budget: f64,
    pub scheme: Scheme,
    pub restarts: usize,
    pub seed: u64,
    pub weight_exponent: f64,
    pub stop_rule: StopRule,
    /// Copy cap used by [`item_efficiency`].
    pub max_copies: usize,
}

impl SolveRequest {
    pub fn new(pool: ClassifierPool, budget: f64, scheme: Scheme) -> Self {
        SolveRequest {
            pool,
            budget,
            scheme,
            restarts: 100,
            seed: 0,
            weight_exponent: DEFAULT_WEIGHT_EXPONENT,
            stop_rule: StopRule::FixedRestarts,
            max_copies: DEFAULT_MAX_COPIES,
        }
    }

    fn validate(&self) -> Result<()> {
        check_budget(self.budget)?;
        if !(self.weight_exponent >= 0.0 && self.weight_exponent.is_finite()) {
            return Err(invalid(format!(
                "weight exponent {} must be finite and nonnegative",
                self.weight_exponent
            )));
        }
        if self.max_copies == 0 {
            return Err(invalid("copy cap must be positive"));
        }
        Ok(())
    }
}

fn check_budget(budget: f64) -> Result<()> {
    if budget >= 0.0 && budget.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("budget {budget} must be finite and nonnegative")))
    }
}

/// A set of distinct pool members, kept in sorted id order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ensemble {
    member_ids: Vec<String>,
}

impl Ensemble {
    pub fn new<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut member_ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        member_ids.sort();
        if let Some(w) = member_ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid(format!("classifier {:?} appears twice in the ensemble", w[0])));
        }
        Ok(Ensemble { member_ids })
    }

    pub fn empty() -> Self {
        Ensemble::default()
    }

    pub fn member_ids(&self) -> &[String] {
        &self.member_ids
    }

    pub fn len(&self) -> usize {
        self.member_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }

    fn from_indices(pool: &ClassifierPool, indices: &[usize]) -> Self {
        let mut member_ids: Vec<String> =
            indices.iter().map(|&i| pool.members()[i].id.clone()).collect();
        member_ids.sort();
        Ensemble { member_ids }
    }

    /// Pool positions of the members, in pool order.
    pub fn indices(&self, pool: &ClassifierPool) -> Result<Vec<usize>> {
        let mut out = self
            .member_ids
            .iter()
            .map(|id| {
                pool.index_of(id)
                    .ok_or_else(|| invalid(format!("unknown classifier id {id:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        Ok(out)
    }
}

impl Serialize for Ensemble {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.member_ids.serialize(serializer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub best: Ensemble,
    pub accuracy: f64,
    pub total_time: f64,
    pub budget: f64,
    pub scheme: Scheme,
    pub method: String,
    pub evaluations: u64,
    /// No nonempty subset fits the budget.
    pub infeasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts_run: Option<u64>,
    pub trace: Vec<TracePoint>,
}

/// Total time of the given pool positions, summed in pool order.
fn time_of(pool: &ClassifierPool, indices: &[usize]) -> f64 {
    indices.iter().map(|&i| pool.members()[i].time).sum()
}

pub fn feasible(pool: &ClassifierPool, subset: &Ensemble, budget: f64) -> Result<bool> {
    check_budget(budget)?;
    let idx = subset.indices(pool)?;
    Ok(time_of(pool, &idx) <= budget)
}

/// Accuracy of `subset` under the scheme's profile for its size.
pub fn evaluate_subset(pool: &ClassifierPool, subset: &Ensemble, scheme: &Scheme) -> Result<f64> {
    if subset.is_empty() {
        return Err(invalid("cannot evaluate an empty ensemble"));
    }
    let idx = subset.indices(pool)?;
    let profile = scheme.profile(idx.len())?;
    Ok(canonical_accuracy(pool, &time_ranks(pool), &idx, profile.coefficients()))
}

/// Pool positions in ascending (time, index) order.
fn time_order(pool: &ClassifierPool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        pool.members()[a]
            .time
            .total_cmp(&pool.members()[b].time)
            .then(a.cmp(&b))
    });
    order
}

/// Rank of every pool member in [`time_order`].
fn time_ranks(pool: &ClassifierPool) -> Vec<usize> {
    let mut rank = vec![0; pool.len()];
    for (r, i) in time_order(pool).into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Subset accuracy with members accumulated in time order. Floating-point
/// sums depend on the order of accumulation, so every reported accuracy goes
/// through here (or through the exhaustive search, which already visits
/// items in this order); otherwise the same subset could score a few ulps
/// differently depending on how it was assembled.
fn canonical_accuracy(pool: &ClassifierPool, rank: &[usize], indices: &[usize], coefficients: &[f64]) -> f64 {
    let mut sorted = indices.to_vec();
    sorted.sort_unstable_by_key(|&i| rank[i]);
    let mut counts = CountAccumulator::with_capacity(sorted.len());
    for i in sorted {
        counts.push(pool.members()[i].accuracy);
    }
    counts.expect(coefficients)
}

/// Accuracy of a hypothetical ensemble made of as many copies of the item as
/// fit in the budget (at least one, at most `max_copies`).
pub fn item_efficiency(
    pool: &ClassifierPool,
    item_id: &str,
    budget: f64,
    scheme: &Scheme,
    max_copies: usize,
) -> Result<f64> {
    check_budget(budget)?;
    let item = pool
        .get(item_id)
        .ok_or_else(|| invalid(format!("unknown classifier id {item_id:?}")))?;
    let copies = copy_count(item.time, budget, max_copies.min(scheme.max_members()));
    q_multi(&vec![item.accuracy; copies], &scheme.profile(copies)?)
}

fn copy_count(time: f64, budget: f64, cap: usize) -> usize {
    let cap = cap.max(1);
    if time <= 0.0 {
        return cap;
    }
    let fit = (budget / time).floor();
    if fit >= cap as f64 {
        cap
    } else {
        (fit as usize).max(1)
    }
}

/// Profiles for every ensemble size up to a maximum, built once per solve.
/// Incremental scores within this distance of the incumbent are recomputed
/// in canonical order before being compared. Accumulation error is around
/// 1e-15, so anything farther below cannot win.
const RESCORE_MARGIN: f64 = 1e-9;

struct ProfileTable {
    by_size: Vec<VotingProfile>,
}

impl ProfileTable {
    fn build(scheme: &Scheme, max_size: usize) -> Result<Self> {
        let by_size = (1..=max_size)
            .map(|s| scheme.profile(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProfileTable { by_size })
    }

    fn coefficients(&self, size: usize) -> &[f64] {
        self.by_size[size - 1].coefficients()
    }
}

/// Size of the largest subset that fits: take the cheapest items first.
fn max_feasible_size(pool: &ClassifierPool, budget: f64) -> usize {
    let mut times: Vec<f64> = pool.members().iter().map(|c| c.time).collect();
    times.sort_by(f64::total_cmp);
    let mut used = 0.0;
    let mut count = 0;
    for t in times {
        if used + t > budget {
            break;
        }
        used += t;
        count += 1;
    }
    count
}

#[derive(Debug, Clone)]
struct Candidate {
    ensemble: Ensemble,
    accuracy: f64,
    total_time: f64,
}

impl Candidate {
    fn new(pool: &ClassifierPool, mut indices: Vec<usize>, accuracy: f64) -> Self {
        indices.sort_unstable();
        let total_time = time_of(pool, &indices);
        let ensemble = Ensemble::from_indices(pool, &indices);
        Candidate {
            ensemble,
            accuracy,
            total_time,
        }
    }

    /// Higher accuracy, then smaller total time, then smaller sorted ids.
    fn preference(&self, other: &Candidate) -> Ordering {
        self.accuracy
            .total_cmp(&other.accuracy)
            .then_with(|| other.total_time.total_cmp(&self.total_time))
            .then_with(|| other.ensemble.member_ids.cmp(&self.ensemble.member_ids))
    }

    fn beats(&self, incumbent: &Option<Candidate>) -> bool {
        match incumbent {
            None => true,
            Some(inc) => self.preference(inc) == Ordering::Greater,
        }
    }
}

fn empty_report(req: &SolveRequest, method: &str, evaluations: u64) -> SolveReport {
    SolveReport {
        best: Ensemble::empty(),
        accuracy: 0.0,
        total_time: 0.0,
        budget: req.budget,
        scheme: req.scheme.clone(),
        method: method.to_owned(),
        evaluations,
        infeasible: true,
        stop_rule: None,
        restarts_run: None,
        trace: Vec::new(),
    }
}

fn report_from(req: &SolveRequest, best: Candidate, method: &str, evaluations: u64) -> SolveReport {
    SolveReport {
        best: best.ensemble,
        accuracy: best.accuracy,
        total_time: best.total_time,
        budget: req.budget,
        scheme: req.scheme.clone(),
        method: method.to_owned(),
        evaluations,
        infeasible: false,
        stop_rule: None,
        restarts_run: None,
        trace: Vec::new(),
    }
}

/// Exact optimum over every feasible subset.
///
/// Items are visited in ascending time order, so once the next item overruns
/// the residual budget every later one does too and the branch is cut.
pub fn solve_exhaustive(req: &SolveRequest) -> Result<SolveReport> {
    req.validate()?;
    let pool = &req.pool;
    let n = pool.len();
    if n > EXHAUSTIVE_MAX_ITEMS {
        return Err(Error::SizeLimit {
            what: "pool size for exhaustive search",
            limit: EXHAUSTIVE_MAX_ITEMS as u64,
            got: n as u64,
        });
    }
    let max_size = max_feasible_size(pool, req.budget);
    if max_size == 0 {
        return Ok(empty_report(req, "exhaustive", 0));
    }
    let profiles = ProfileTable::build(&req.scheme, max_size)?;

    let order = time_order(pool);
    let mut search = Exhaustive {
        pool,
        order: &order,
        profiles: &profiles,
        budget: req.budget,
        chosen: Vec::with_capacity(max_size),
        best: None,
        evaluations: 0,
    };
    search.descend(0, &CountAccumulator::with_capacity(max_size), 0.0);
    let evaluations = search.evaluations;
    Ok(match search.best {
        Some(best) => report_from(req, best, "exhaustive", evaluations),
        None => empty_report(req, "exhaustive", evaluations),
    })
}

struct Exhaustive<'a> {
    pool: &'a ClassifierPool,
    order: &'a [usize],
    profiles: &'a ProfileTable,
    budget: f64,
    chosen: Vec<usize>,
    best: Option<Candidate>,
    evaluations: u64,
}

impl Exhaustive<'_> {
    fn descend(&mut self, start: usize, counts: &CountAccumulator, used: f64) {
        for pos in start..self.order.len() {
            let item = &self.pool.members()[self.order[pos]];
            if used + item.time > self.budget {
                break;
            }
            let mut next = counts.clone();
            next.push(item.accuracy);
            self.chosen.push(self.order[pos]);

            let accuracy = next.expect(self.profiles.coefficients(next.members()));
            self.evaluations += 1;
            let candidate = Candidate::new(self.pool, self.chosen.clone(), accuracy);
            if candidate.total_time <= self.budget && candidate.beats(&self.best) {
                self.best = Some(candidate);
            }

            self.descend(pos + 1, &next, used + item.time);
            self.chosen.pop();
        }
    }
}

/// Outcome of one randomized construction.
struct RestartOutcome {
    best: Option<Candidate>,
    evaluations: u64,
}

/// Randomized greedy construction with restarts.
///
/// Each restart repeatedly draws one of the still-fitting items with
/// probability proportional to `efficiency^weight_exponent` until nothing
/// fits, scoring every intermediate ensemble along the way. The best
/// ensemble over all restarts is returned.
pub fn solve_stochastic(req: &SolveRequest) -> Result<SolveReport> {
    req.validate()?;
    if req.restarts == 0 {
        return Err(invalid("restarts must be at least 1"));
    }
    let pool = &req.pool;
    let n = pool.len();
    let max_size = max_feasible_size(pool, req.budget);
    let mut evaluations = 0u64;
    if max_size == 0 {
        let mut report = empty_report(req, "stochastic", 0);
        report.stop_rule = Some(stop_label(req.stop_rule));
        report.restarts_run = Some(0);
        return Ok(report);
    }
    let profiles = ProfileTable::build(&req.scheme, max_size)?;

    let weights: Vec<f64> = pool
        .members()
        .iter()
        .map(|c| {
            item_efficiency(pool, &c.id, req.budget, &req.scheme, req.max_copies)
                .map(|e| e.powf(req.weight_exponent))
        })
        .collect::<Result<_>>()?;
    evaluations += n as u64;

    let rank = time_ranks(pool);
    let restart = |r: usize| -> RestartOutcome {
        let mut rng = rng::stream(req.seed, r as u64);
        construct(pool, &weights, &profiles, &rank, req.budget, &mut rng)
    };

    let mut best: Option<Candidate> = None;
    let mut trace = Vec::new();
    let mut improved_flags: Vec<bool> = Vec::with_capacity(req.restarts);
    let mut done = 0usize;
    'outer: while done < req.restarts {
        let chunk_end = (done + IMPROVEMENT_WINDOW).min(req.restarts);
        let outcomes: Vec<RestartOutcome> = (done..chunk_end).into_par_iter().map(restart).collect();
        for outcome in outcomes {
            done += 1;
            evaluations += outcome.evaluations;
            let mut improved = false;
            if let Some(cand) = outcome.best {
                let strictly_better = best.as_ref().is_none_or(|b| cand.accuracy > b.accuracy);
                if cand.beats(&best) {
                    if strictly_better {
                        improved = true;
                        trace.push(TracePoint {
                            iteration: done as u64,
                            accuracy: cand.accuracy,
                        });
                    }
                    best = Some(cand);
                }
            }
            improved_flags.push(improved);
            if let StopRule::ImprovementProbability(eps) = req.stop_rule {
                if improved_flags.len() >= IMPROVEMENT_WINDOW {
                    let recent = &improved_flags[improved_flags.len() - IMPROVEMENT_WINDOW..];
                    let rate = recent.iter().filter(|&&b| b).count() as f64 / IMPROVEMENT_WINDOW as f64;
                    if rate < eps {
                        break 'outer;
                    }
                }
            }
        }
    }

    let mut report = match best {
        Some(best) => report_from(req, best, "stochastic", evaluations),
        None => empty_report(req, "stochastic", evaluations),
    };
    report.stop_rule = Some(stop_label(req.stop_rule));
    report.restarts_run = Some(done as u64);
    report.trace = trace;
    Ok(report)
}

fn stop_label(rule: StopRule) -> String {
    match rule {
        StopRule::FixedRestarts => "fixed".to_owned(),
        StopRule::ImprovementProbability(eps) => format!(
            "improve:{eps} (heuristic: recent-improvement frequency over {IMPROVEMENT_WINDOW} restarts)"
        ),
    }
}

fn construct<R: Rng>(
    pool: &ClassifierPool,
    weights: &[f64],
    profiles: &ProfileTable,
    rank: &[usize],
    budget: f64,
    rng: &mut R,
) -> RestartOutcome {
    let members = pool.members();
    let mut available: Vec<bool> = vec![true; members.len()];
    let mut chosen = Vec::new();
    let mut counts = CountAccumulator::new();
    let mut used = 0.0;
    let mut best: Option<Candidate> = None;
    let mut evaluations = 0;
    let mut candidates = Vec::with_capacity(members.len());

    loop {
        candidates.clear();
        candidates.extend(
            (0..members.len()).filter(|&i| available[i] && used + members[i].time <= budget),
        );
        if candidates.is_empty() {
            break;
        }
        let pick = weighted_pick(&candidates, weights, rng);
        available[pick] = false;
        used += members[pick].time;
        chosen.push(pick);
        counts.push(members[pick].accuracy);

        let coefficients = profiles.coefficients(counts.members());
        let quick = counts.expect(coefficients);
        evaluations += 1;
        if best.as_ref().is_some_and(|b| quick < b.accuracy - RESCORE_MARGIN) {
            continue;
        }
        let accuracy = canonical_accuracy(pool, rank, &chosen, coefficients);
        let candidate = Candidate::new(pool, chosen.clone(), accuracy);
        if candidate.total_time <= budget && candidate.beats(&best) {
            best = Some(candidate);
        }
    }
    RestartOutcome { best, evaluations }
}

fn weighted_pick<R: Rng>(candidates: &[usize], weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = candidates.iter().map(|&i| weights[i]).sum();
    if !(total > 0.0) {
        return candidates[rng.gen_range(0..candidates.len())];
    }
    let mut target = rng.gen::<f64>() * total;
    for &i in candidates {
        target -= weights[i];
        if target < 0.0 {
            return i;
        }
    }
    // Rounding left a sliver past the last weight.
    *candidates
        .iter()
        .rev()
        .find(|&&i| weights[i] > 0.0)
        .expect("positive total weight")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voting::Classifier;

    fn pool(items: &[(&str, f64, f64)]) -> ClassifierPool {
        ClassifierPool::new(
            items
                .iter()
                .map(|&(id, p, t)| Classifier::new(id, p, t).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn abc() -> ClassifierPool {
        pool(&[("A", 0.9, 1.0), ("B", 0.8, 1.0), ("C", 0.7, 1.0)])
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn feasibility_examples() {
        let p = pool(&[("A", 0.5, 1.0), ("B", 0.5, 2.0)]);
        let both = Ensemble::new(["A", "B"]).unwrap();
        assert!(feasible(&p, &both, 3.0).unwrap());
        assert!(!feasible(&p, &both, 2.9).unwrap());
        assert!(feasible(&p, &Ensemble::empty(), 0.0).unwrap());
        assert!(feasible(&p, &Ensemble::new(["Z"]).unwrap(), 5.0).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let p = abc();
        let all = Ensemble::new(["A", "B", "C"]).unwrap();
        assert!(close(evaluate_subset(&p, &all, &Scheme::Classical).unwrap(), 0.902));
        let a = Ensemble::new(["A"]).unwrap();
        for scheme in [Scheme::Classical, Scheme::Cdf(CdfSpec::Arcsine), Scheme::Pnk(3)] {
            assert!(close(evaluate_subset(&p, &a, &scheme).unwrap(), 0.9));
        }
        // Two voters under strict majority need both to be right.
        let ab = Ensemble::new(["A", "B"]).unwrap();
        assert!(close(evaluate_subset(&p, &ab, &Scheme::Classical).unwrap(), 0.72));
        assert!(evaluate_subset(&p, &Ensemble::empty(), &Scheme::Classical).is_err());
    }

    #[test]
    fn ensemble_rejects_duplicates() {
        assert!(Ensemble::new(["A", "A"]).is_err());
    }

    #[test]
    fn efficiency_examples() {
        let p = pool(&[("X", 0.6, 1.0), ("Y", 0.9, 10.0), ("Z", 1.0, 1.0), ("W", 0.7, 0.0)]);
        let e = item_efficiency(&p, "X", 3.0, &Scheme::Classical, DEFAULT_MAX_COPIES).unwrap();
        assert!(close(e, 0.648));
        let e = item_efficiency(&p, "Y", 3.0, &Scheme::Classical, DEFAULT_MAX_COPIES).unwrap();
        assert!(close(e, 0.9));
        let e = item_efficiency(&p, "Z", 5.0, &Scheme::Classical, DEFAULT_MAX_COPIES).unwrap();
        assert!(close(e, 1.0));
        // Zero-cost item: capped at the copy limit.
        let capped = item_efficiency(&p, "W", 3.0, &Scheme::Classical, 5).unwrap();
        let five = crate::voting::q_binary(&[0.7; 5]).unwrap();
        assert!(close(capped, five));
        assert!(item_efficiency(&p, "nope", 3.0, &Scheme::Classical, 51).is_err());
    }

    #[test]
    fn exhaustive_examples() {
        let mut req = SolveRequest::new(abc(), 3.0, Scheme::Classical);
        let r = solve_exhaustive(&req).unwrap();
        assert_eq!(r.best, Ensemble::new(["A", "B", "C"]).unwrap());
        assert!(close(r.accuracy, 0.902));
        assert!(!r.infeasible);
        assert_eq!(r.evaluations, 7);

        req.budget = 1.0;
        let r = solve_exhaustive(&req).unwrap();
        assert_eq!(r.best, Ensemble::new(["A"]).unwrap());
        assert!(close(r.accuracy, 0.9));

        let req = SolveRequest::new(pool(&[("A", 0.9, 5.0)]), 4.0, Scheme::Classical);
        let r = solve_exhaustive(&req).unwrap();
        assert!(r.infeasible);
        assert!(r.best.is_empty());
        assert_eq!(r.accuracy, 0.0);
    }

    #[test]
    fn exhaustive_tie_break_prefers_cheaper_then_smaller_ids() {
        let p = pool(&[("B", 1.0, 1.0), ("A", 1.0, 2.0), ("C", 1.0, 1.0)]);
        let r = solve_exhaustive(&SolveRequest::new(p, 1.0, Scheme::Classical)).unwrap();
        assert_eq!(r.best, Ensemble::new(["B"]).unwrap());
    }

    #[test]
    fn exhaustive_size_limit() {
        let items: Vec<Classifier> = (0..26)
            .map(|i| Classifier::new(format!("c{i}"), 0.6, 1.0).unwrap())
            .collect();
        let req = SolveRequest::new(ClassifierPool::new(items).unwrap(), 3.0, Scheme::Classical);
        assert!(matches!(solve_exhaustive(&req), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn stochastic_examples() {
        let single = pool(&[("A", 0.7, 1.0), ("B", 0.9, 10.0)]);
        let mut req = SolveRequest::new(single, 2.0, Scheme::Classical);
        req.restarts = 1;
        let r = solve_stochastic(&req).unwrap();
        assert_eq!(r.best, Ensemble::new(["A"]).unwrap());

        let mut req = SolveRequest::new(abc(), 3.0, Scheme::Classical);
        req.restarts = 200;
        req.seed = 42;
        let r = solve_stochastic(&req).unwrap();
        assert!(close(r.accuracy, 0.902));
        assert_eq!(r.restarts_run, Some(200));
        assert!(!r.trace.is_empty());
    }

    #[test]
    fn stochastic_infeasible() {
        let req = SolveRequest::new(pool(&[("A", 0.9, 5.0)]), 4.0, Scheme::Classical);
        let r = solve_stochastic(&req).unwrap();
        assert!(r.infeasible && r.best.is_empty());
    }

    #[test]
    fn improvement_rule_stops_early() {
        let mut req = SolveRequest::new(abc(), 3.0, Scheme::Classical);
        req.restarts = 10_000;
        req.stop_rule = StopRule::ImprovementProbability(0.05);
        let r = solve_stochastic(&req).unwrap();
        assert_eq!(r.restarts_run, Some(IMPROVEMENT_WINDOW as u64));
        assert!(r.stop_rule.unwrap().contains("heuristic"));
    }

    #[test]
    fn zero_exponent_is_uniform_baseline() {
        let mut req = SolveRequest::new(abc(), 2.0, Scheme::Classical);
        req.weight_exponent = 0.0;
        req.restarts = 50;
        let r = solve_stochastic(&req).unwrap();
        let exact = solve_exhaustive(&req).unwrap();
        assert!(r.accuracy <= exact.accuracy + 1e-12);
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("classical".parse::<Scheme>().unwrap(), Scheme::Classical);
        assert_eq!(
            "cdf:beta:0.5:0.5".parse::<Scheme>().unwrap(),
            Scheme::Cdf(CdfSpec::Beta { a: 0.5, b: 0.5 })
        );
        assert_eq!("pnk:3".parse::<Scheme>().unwrap(), Scheme::Pnk(3));
        assert_eq!("cdf:arcsine".parse::<Scheme>().unwrap(), Scheme::Cdf(CdfSpec::Arcsine));
        assert!(matches!("majority".parse::<Scheme>(), Err(Error::Usage(_))));
        assert!(matches!("cdf:gauss".parse::<Scheme>(), Err(Error::Usage(_))));
        assert!(matches!("cdf:beta:-1:2".parse::<Scheme>(), Err(Error::Validation(_))));
        assert!(matches!("pnk:1".parse::<Scheme>(), Err(Error::Validation(_))));
        for s in ["classical", "cdf:step", "cdf:beta:2:5", "pnk:4"] {
            assert_eq!(s.parse::<Scheme>().unwrap().to_string(), s);
        }
    }
}
