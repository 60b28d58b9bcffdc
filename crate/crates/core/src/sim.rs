//! Reproducible experiments: synthetic pools, end-to-end plurality voting,
//! and the three sweep kinds (expected-accuracy checks, closed formula versus
//! simulation for `p_{n,k}(d)`, and solver benchmarks).
//!
//! Every random quantity is derived from the experiment seed and the row's
//! position in the grid, so reruns of the same spec are bit-identical.

use std::ops::RangeInclusive;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::knapsack::{solve_exhaustive, solve_stochastic, Scheme, SolveRequest, StopRule};
use crate::pnk::{
    format_rational, pnk_closed_form, pnk_monte_carlo, residual_vote, true_class_wins,
    GenerativeModel, McEstimate, PnkRequest, PNK_MAX_D, PNK_MAX_N,
};
use crate::rng::{self, derive_seed};
use crate::theory::{
    asymptotic_accuracy, expected_accuracy, sample_ensemble_accuracy, variance_bound, CdfSpec,
};
use crate::voting::{Classifier, ClassifierPool};

/// Tolerance for exact agreement of deterministic quantities.
pub const EXACT_TOLERANCE: f64 = 1e-12;

fn check_range(name: &str, range: &RangeInclusive<f64>, lo_bound: f64, hi_bound: f64) -> Result<()> {
    let (lo, hi) = (*range.start(), *range.end());
    if lo.is_finite() && hi.is_finite() && lo_bound <= lo && lo <= hi && hi <= hi_bound {
        Ok(())
    } else {
        Err(invalid(format!(
            "{name} range [{lo}, {hi}] must satisfy {lo_bound} <= lo <= hi <= {hi_bound}"
        )))
    }
}

/// `n` classifiers with accuracy and time drawn uniformly from the ranges.
pub fn pool_generate(
    n: usize,
    accuracy_range: RangeInclusive<f64>,
    time_range: RangeInclusive<f64>,
    seed: u64,
) -> Result<ClassifierPool> {
    if n == 0 {
        return Err(invalid("pool size must be positive"));
    }
    check_range("accuracy", &accuracy_range, 0.0, 1.0)?;
    check_range("time", &time_range, 0.0, f64::MAX)?;
    let mut rng = rng::stream(seed, 0);
    let width = n.to_string().len();
    let members = (0..n)
        .map(|i| {
            let accuracy = rng.gen_range(accuracy_range.clone());
            let time = rng.gen_range(time_range.clone());
            Classifier::new(format!("c{i:0width$}"), accuracy, time)
        })
        .collect::<Result<Vec<_>>>()?;
    ClassifierPool::new(members)
}

/// Plurality vote of the whole pool over `d` classes. Each member is correct
/// with its own accuracy, otherwise it votes per `model`; ties are broken
/// uniformly.
pub fn ensemble_vote_simulate(
    pool: &ClassifierPool,
    d: usize,
    model: GenerativeModel,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if d < 2 {
        return Err(invalid(format!("class count d = {d} must be at least 2")));
    }
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let accuracies = pool.accuracies();
    let wins: u64 = rng::batched(trials, seed, |rng, count| {
        let mut tally = vec![0u32; d];
        let mut wins = 0u64;
        for _ in 0..count {
            tally.fill(0);
            for &p in &accuracies {
                if rng.gen_bool(p) {
                    tally[0] += 1;
                } else {
                    tally[residual_vote(model, d, rng)] += 1;
                }
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

// ---------------------------------------------------------------------------
// Experiment specifications

fn default_mean_se() -> f64 {
    4.0
}
fn default_variance_se() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremGridPoint {
    /// Distribution of the member accuracies.
    pub accuracy: CdfSpec,
    /// CDF defining the profile `p_{n,k} = F(k/n)`.
    pub profile: CdfSpec,
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremCheckSpec {
    pub seed: u64,
    pub draws: u64,
    pub grid: Vec<TheoremGridPoint>,
    /// Mean passes within this many standard errors of the expectation.
    #[serde(default = "default_mean_se")]
    pub mean_tolerance_se: f64,
    /// Variance passes below `bound + slack + this many standard errors`.
    #[serde(default = "default_variance_se")]
    pub variance_tolerance_se: f64,
    #[serde(default)]
    pub variance_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PnkCompareSpec {
    pub seed: u64,
    pub trials: u64,
    pub n: Vec<usize>,
    pub d: Vec<usize>,
}

fn default_scheme() -> String {
    "classical".to_owned()
}
fn default_weight_exponent() -> f64 {
    crate::knapsack::DEFAULT_WEIGHT_EXPONENT
}
fn default_stop() -> String {
    "fixed".to_owned()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBenchmarkSpec {
    pub seed: u64,
    pub instances: usize,
    pub n: usize,
    pub accuracy_range: [f64; 2],
    pub time_range: [f64; 2],
    /// Budget as a fraction of the pool's total time.
    pub budget_fraction: f64,
    pub restarts: usize,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_weight_exponent")]
    pub weight_exponent: f64,
    #[serde(default = "default_stop")]
    pub stop: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentSpec {
    TheoremCheck(TheoremCheckSpec),
    PnkCompare(PnkCompareSpec),
    SolverBenchmark(SolverBenchmarkSpec),
}

impl ExperimentSpec {
    pub fn seed(&self) -> u64 {
        match self {
            ExperimentSpec::TheoremCheck(s) => s.seed,
            ExperimentSpec::PnkCompare(s) => s.seed,
            ExperimentSpec::SolverBenchmark(s) => s.seed,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::TheoremCheck(_) => "theorem_check",
            ExperimentSpec::PnkCompare(_) => "pnk_compare",
            ExperimentSpec::SolverBenchmark(_) => "solver_benchmark",
        }
    }

    /// Checks every grid value against the preconditions of the operation it
    /// feeds.
    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentSpec::TheoremCheck(s) => {
                if s.draws < 2 {
                    return Err(Error::Validation("draws must be at least 2".into()));
                }
                for (name, v) in [
                    ("mean_tolerance_se", s.mean_tolerance_se),
                    ("variance_tolerance_se", s.variance_tolerance_se),
                    ("variance_slack", s.variance_slack),
                ] {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(Error::Validation(format!("{name} must be finite and >= 0")));
                    }
                }
                for point in &s.grid {
                    if point.n.contains(&0) {
                        return Err(Error::Validation("grid n values must be positive".into()));
                    }
                }
                Ok(())
            }
            ExperimentSpec::PnkCompare(s) => {
                if s.trials == 0 {
                    return Err(Error::Validation("trials must be at least 1".into()));
                }
                if let Some(&n) = s.n.iter().find(|&&n| n == 0 || n > PNK_MAX_N) {
                    return Err(Error::Validation(format!("n = {n} must lie in 1..={PNK_MAX_N}")));
                }
                if let Some(&d) = s.d.iter().find(|&&d| !(2..=PNK_MAX_D).contains(&d)) {
                    return Err(Error::Validation(format!("d = {d} must lie in 2..={PNK_MAX_D}")));
                }
                Ok(())
            }
            ExperimentSpec::SolverBenchmark(s) => {
                if s.n == 0 || s.n > crate::knapsack::EXHAUSTIVE_MAX_ITEMS {
                    return Err(Error::Validation(format!(
                        "n = {} must lie in 1..={}",
                        s.n,
                        crate::knapsack::EXHAUSTIVE_MAX_ITEMS
                    )));
                }
                if s.restarts == 0 {
                    return Err(Error::Validation("restarts must be at least 1".into()));
                }
                if !(s.budget_fraction >= 0.0 && s.budget_fraction.is_finite()) {
                    return Err(Error::Validation("budget_fraction must be >= 0".into()));
                }
                if !(s.weight_exponent >= 0.0 && s.weight_exponent.is_finite()) {
                    return Err(Error::Validation("weight_exponent must be >= 0".into()));
                }
                check_range("accuracy", &(s.accuracy_range[0]..=s.accuracy_range[1]), 0.0, 1.0)
                    .map_err(|e| Error::Validation(e.to_string()))?;
                check_range("time", &(s.time_range[0]..=s.time_range[1]), 0.0, f64::MAX)
                    .map_err(|e| Error::Validation(e.to_string()))?;
                s.scheme.parse::<Scheme>()?;
                s.stop.parse::<StopRule>()?;
                Ok(())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Results

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub kind: &'static str,
    pub seed: u64,
    /// Taken from `SOURCE_DATE_EPOCH` when set; otherwise null so that
    /// reruns stay byte-identical.
    pub timestamp: Option<String>,
    pub version: &'static str,
    pub workers: usize,
}

impl Metadata {
    fn new(spec: &ExperimentSpec) -> Self {
        Metadata {
            kind: spec.kind(),
            seed: spec.seed(),
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok(),
            version: env!("CARGO_PKG_VERSION"),
            workers: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub passed: usize,
    pub pass_rate: f64,
    /// Solver benchmarks only: fraction of instances where the stochastic
    /// solver reached the exhaustive optimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremRow {
    pub accuracy_cdf: String,
    pub profile_cdf: String,
    pub n: usize,
    pub draws: u64,
    pub mu: f64,
    pub mean: f64,
    pub mean_std_error: f64,
    pub expected: f64,
    pub asymptotic: f64,
    pub deviation_from_expected: f64,
    pub deviation_from_asymptotic: f64,
    pub variance: f64,
    pub variance_std_error: f64,
    pub variance_bound: f64,
    pub mean_pass: bool,
    pub variance_pass: bool,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PnkRow {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub formula_exact: String,
    pub formula: f64,
    pub wrong_estimate: f64,
    pub wrong_std_error: f64,
    pub wrong_deviation: f64,
    pub all_estimate: f64,
    pub all_std_error: f64,
    pub all_deviation: f64,
    pub trials: u64,
    pub range_ok: bool,
    pub terminal_ok: bool,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverRow {
    pub instance: usize,
    pub instance_seed: u64,
    pub n: usize,
    pub budget: f64,
    pub exhaustive_accuracy: f64,
    pub stochastic_accuracy: f64,
    pub exhaustive_members: String,
    pub stochastic_members: String,
    pub hit: bool,
    pub exhaustive_evaluations: u64,
    pub stochastic_evaluations: u64,
    /// Stochastic never beats the exact optimum.
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Rows {
    TheoremCheck(Vec<TheoremRow>),
    PnkCompare(Vec<PnkRow>),
    SolverBenchmark(Vec<SolverRow>),
}

impl Rows {
    pub fn len(&self) -> usize {
        match self {
            Rows::TheoremCheck(r) => r.len(),
            Rows::PnkCompare(r) => r.len(),
            Rows::SolverBenchmark(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub metadata: Metadata,
    pub summary: Summary,
    pub rows: Rows,
}

fn summarize(passes: impl Iterator<Item = bool>, hits: Option<Vec<bool>>) -> Summary {
    let flags: Vec<bool> = passes.collect();
    let rows = flags.len();
    let passed = flags.iter().filter(|&&p| p).count();
    let rate = |count: usize, total: usize| if total == 0 { 1.0 } else { count as f64 / total as f64 };
    Summary {
        rows,
        passed,
        pass_rate: rate(passed, rows),
        hit_rate: hits.map(|h| rate(h.iter().filter(|&&x| x).count(), h.len())),
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    match spec {
        ExperimentSpec::TheoremCheck(_) => run_theorem_check(spec),
        ExperimentSpec::PnkCompare(_) => run_pnk_compare(spec),
        ExperimentSpec::SolverBenchmark(_) => run_solver_benchmark(spec),
    }
}

fn wrong_kind(expected: &str) -> Error {
    invalid(format!("experiment spec is not a {expected} spec"))
}

/// Sampled mean and variance of the ensemble accuracy against the expected
/// value, its large-`n` limit and the variance bound, one row per
/// `(accuracy distribution, profile, n)`.
pub fn run_theorem_check(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let ExperimentSpec::TheoremCheck(s) = spec else {
        return Err(wrong_kind("theorem_check"));
    };
    spec.validate()?;
    let points: Vec<(&TheoremGridPoint, usize)> = s
        .grid
        .iter()
        .flat_map(|p| p.n.iter().map(move |&n| (p, n)))
        .collect();

    let rows: Vec<TheoremRow> = points
        .par_iter()
        .enumerate()
        .map(|(i, &(point, n))| theorem_row(s, point, n, derive_seed(s.seed, i as u64)))
        .collect();

    Ok(ExperimentResult {
        metadata: Metadata::new(spec),
        summary: summarize(rows.iter().map(|r| r.pass), None),
        rows: Rows::TheoremCheck(rows),
    })
}

fn theorem_row(s: &TheoremCheckSpec, point: &TheoremGridPoint, n: usize, seed: u64) -> TheoremRow {
    let mu = point.accuracy.mean();
    let mut row = TheoremRow {
        accuracy_cdf: point.accuracy.to_string(),
        profile_cdf: point.profile.to_string(),
        n,
        draws: s.draws,
        mu,
        mean: 0.0,
        mean_std_error: 0.0,
        expected: 0.0,
        asymptotic: 0.0,
        deviation_from_expected: 0.0,
        deviation_from_asymptotic: 0.0,
        variance: 0.0,
        variance_std_error: 0.0,
        variance_bound: 0.0,
        mean_pass: false,
        variance_pass: false,
        pass: false,
        error: None,
    };
    let measured = (|| -> Result<()> {
        let sample = sample_ensemble_accuracy(&point.accuracy, n, &point.profile, s.draws, seed)?;
        row.mean = sample.mean;
        row.mean_std_error = sample.mean_std_error;
        row.variance = sample.variance;
        row.variance_std_error = sample.variance_std_error;
        row.expected = expected_accuracy(&point.profile, mu, n)?;
        row.asymptotic = asymptotic_accuracy(&point.profile, mu)?;
        row.variance_bound = variance_bound(&point.profile, mu)?;
        Ok(())
    })();
    if let Err(e) = measured {
        row.error = Some(e.to_string());
        return row;
    }
    row.deviation_from_expected = (row.mean - row.expected).abs();
    row.deviation_from_asymptotic = (row.mean - row.asymptotic).abs();
    row.mean_pass =
        row.deviation_from_expected <= s.mean_tolerance_se * row.mean_std_error + EXACT_TOLERANCE;
    row.variance_pass = row.variance
        <= row.variance_bound + s.variance_slack + s.variance_tolerance_se * row.variance_std_error;
    row.pass = row.mean_pass && row.variance_pass;
    row
}

/// Closed formula against simulation under both residual-vote models for
/// every `(n, d, k)`. Only internal consistency is pass/fail; the deviations
/// between formula and simulation are reported, not judged.
pub fn run_pnk_compare(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let ExperimentSpec::PnkCompare(s) = spec else {
        return Err(wrong_kind("pnk_compare"));
    };
    spec.validate()?;
    let cells: Vec<(usize, usize, usize)> = s
        .d
        .iter()
        .flat_map(|&d| s.n.iter().flat_map(move |&n| (0..=n).map(move |k| (n, d, k))))
        .collect();
    let rows: Vec<PnkRow> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(n, d, k))| pnk_row(s, n, d, k, derive_seed(s.seed, i as u64)))
        .collect();
    Ok(ExperimentResult {
        metadata: Metadata::new(spec),
        summary: summarize(rows.iter().map(|r| r.pass), None),
        rows: Rows::PnkCompare(rows),
    })
}

fn pnk_row(s: &PnkCompareSpec, n: usize, d: usize, k: usize, seed: u64) -> PnkRow {
    let mut row = PnkRow {
        n,
        d,
        k,
        formula_exact: String::new(),
        formula: 0.0,
        wrong_estimate: 0.0,
        wrong_std_error: 0.0,
        wrong_deviation: 0.0,
        all_estimate: 0.0,
        all_std_error: 0.0,
        all_deviation: 0.0,
        trials: s.trials,
        range_ok: false,
        terminal_ok: false,
        pass: false,
        error: None,
    };
    let computed = (|| -> Result<()> {
        let req = PnkRequest::new(n, k, d)?;
        let formula = pnk_closed_form(req)?;
        let wrong = pnk_monte_carlo(
            req,
            GenerativeModel::ResidualOverWrongClasses,
            s.trials,
            derive_seed(seed, 1),
        )?;
        let all = pnk_monte_carlo(
            req,
            GenerativeModel::ResidualOverAllClasses,
            s.trials,
            derive_seed(seed, 2),
        )?;
        row.formula_exact = format_rational(&formula.exact);
        row.formula = formula.value;
        row.wrong_estimate = wrong.estimate;
        row.wrong_std_error = wrong.std_error;
        row.all_estimate = all.estimate;
        row.all_std_error = all.std_error;
        row.wrong_deviation = (wrong.estimate - formula.value).abs();
        row.all_deviation = (all.estimate - formula.value).abs();
        let unit = 0.0..=1.0;
        row.range_ok = unit.contains(&formula.value)
            && unit.contains(&wrong.estimate)
            && unit.contains(&all.estimate);
        row.terminal_ok = k < n
            || (num_traits::One::is_one(&formula.exact)
                && wrong.estimate == 1.0
                && all.estimate == 1.0);
        Ok(())
    })();
    if let Err(e) = computed {
        row.error = Some(e.to_string());
        return row;
    }
    row.pass = row.range_ok && row.terminal_ok;
    row
}

/// Stochastic solver against the exhaustive optimum on random pools.
pub fn run_solver_benchmark(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let ExperimentSpec::SolverBenchmark(s) = spec else {
        return Err(wrong_kind("solver_benchmark"));
    };
    spec.validate()?;
    let scheme: Scheme = s.scheme.parse()?;
    let stop: StopRule = s.stop.parse()?;
    let rows: Vec<SolverRow> = (0..s.instances)
        .into_par_iter()
        .map(|i| solver_row(s, &scheme, stop, i))
        .collect();
    let hits = rows.iter().map(|r| r.hit).collect();
    Ok(ExperimentResult {
        metadata: Metadata::new(spec),
        summary: summarize(rows.iter().map(|r| r.pass), Some(hits)),
        rows: Rows::SolverBenchmark(rows),
    })
}

fn solver_row(s: &SolverBenchmarkSpec, scheme: &Scheme, stop: StopRule, instance: usize) -> SolverRow {
    let instance_seed = derive_seed(s.seed, instance as u64);
    let mut row = SolverRow {
        instance,
        instance_seed,
        n: s.n,
        budget: 0.0,
        exhaustive_accuracy: 0.0,
        stochastic_accuracy: 0.0,
        exhaustive_members: String::new(),
        stochastic_members: String::new(),
        hit: false,
        exhaustive_evaluations: 0,
        stochastic_evaluations: 0,
        pass: false,
        error: None,
    };
    let computed = (|| -> Result<()> {
        let pool = pool_generate(
            s.n,
            s.accuracy_range[0]..=s.accuracy_range[1],
            s.time_range[0]..=s.time_range[1],
            instance_seed,
        )?;
        let budget = s.budget_fraction * pool.total_time();
        let mut req = SolveRequest::new(pool, budget, scheme.clone());
        req.restarts = s.restarts;
        req.seed = derive_seed(instance_seed, 1);
        req.weight_exponent = s.weight_exponent;
        req.stop_rule = stop;
        let exact = solve_exhaustive(&req)?;
        let stochastic = solve_stochastic(&req)?;
        row.budget = budget;
        row.exhaustive_accuracy = exact.accuracy;
        row.stochastic_accuracy = stochastic.accuracy;
        row.exhaustive_members = exact.best.member_ids().join(";");
        row.stochastic_members = stochastic.best.member_ids().join(";");
        row.exhaustive_evaluations = exact.evaluations;
        row.stochastic_evaluations = stochastic.evaluations;
        row.hit = (exact.accuracy - stochastic.accuracy).abs() <= EXACT_TOLERANCE;
        row.pass = stochastic.accuracy <= exact.accuracy + EXACT_TOLERANCE;
        Ok(())
    })();
    if let Err(e) = computed {
        row.error = Some(e.to_string());
        row.pass = false;
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_pool() {
        let p = pool_generate(3, 0.5..=0.5, 1.0..=1.0, 99).unwrap();
        assert!(p.members().iter().all(|c| c.accuracy == 0.5 && c.time == 1.0));
        assert_eq!(p.members()[0].id, "c0");
    }

    #[test]
    fn pool_generation_is_deterministic() {
        let a = pool_generate(12, 0.6..=0.9, 1.0..=5.0, 17).unwrap();
        let b = pool_generate(12, 0.6..=0.9, 1.0..=5.0, 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.members()[0].id, "c00");
        assert!(a.members().iter().all(|c| (0.6..=0.9).contains(&c.accuracy)));
    }

    #[test]
    fn pool_generation_errors() {
        assert!(pool_generate(0, 0.5..=0.9, 1.0..=2.0, 1).is_err());
        assert!(pool_generate(3, 0.9..=0.5, 1.0..=2.0, 1).is_err());
        assert!(pool_generate(3, 0.5..=1.2, 1.0..=2.0, 1).is_err());
        assert!(pool_generate(3, 0.5..=0.9, -1.0..=2.0, 1).is_err());
    }

    #[test]
    fn lone_voter_decides() {
        let pool = ClassifierPool::new(vec![Classifier::new("A", 0.7, 1.0).unwrap()]).unwrap();
        for d in [2, 3, 5] {
            let e = ensemble_vote_simulate(&pool, d, GenerativeModel::ResidualOverWrongClasses, 1_000_000, 5)
                .unwrap();
            assert!((e.estimate - 0.7).abs() <= 3.0 * e.std_error, "d={d}: {e:?}");
        }
    }

    #[test]
    fn perfect_members_always_win() {
        let pool = pool_generate(4, 1.0..=1.0, 1.0..=1.0, 0).unwrap();
        let e = ensemble_vote_simulate(&pool, 4, GenerativeModel::ResidualOverAllClasses, 10_000, 1)
            .unwrap();
        assert_eq!(e.estimate, 1.0);
    }

    #[test]
    fn simulate_rejects_bad_arguments() {
        let pool = pool_generate(2, 0.6..=0.6, 1.0..=1.0, 0).unwrap();
        assert!(ensemble_vote_simulate(&pool, 1, GenerativeModel::ResidualOverAllClasses, 10, 1).is_err());
        assert!(ensemble_vote_simulate(&pool, 3, GenerativeModel::ResidualOverAllClasses, 0, 1).is_err());
    }

    #[test]
    fn theorem_check_point_mass_is_exact() {
        let spec = ExperimentSpec::TheoremCheck(TheoremCheckSpec {
            seed: 3,
            draws: 50,
            grid: vec![TheoremGridPoint {
                accuracy: CdfSpec::point_mass(0.6).unwrap(),
                profile: CdfSpec::StepMajority,
                n: vec![3],
            }],
            mean_tolerance_se: 4.0,
            variance_tolerance_se: 3.0,
            variance_slack: 0.0,
        });
        let result = run_theorem_check(&spec).unwrap();
        let Rows::TheoremCheck(rows) = &result.rows else { panic!() };
        assert_eq!(rows.len(), 1);
        assert!((rows[0].mean - 0.648).abs() <= 1e-12);
        assert!((rows[0].expected - 0.648).abs() <= 1e-12);
        assert_eq!(rows[0].variance, 0.0);
        assert!(rows[0].pass);
    }

    #[test]
    fn empty_grid_gives_no_rows() {
        let spec = ExperimentSpec::TheoremCheck(TheoremCheckSpec {
            seed: 3,
            draws: 50,
            grid: vec![],
            mean_tolerance_se: 4.0,
            variance_tolerance_se: 3.0,
            variance_slack: 0.0,
        });
        let result = run_theorem_check(&spec).unwrap();
        assert!(result.rows.is_empty());
        assert_eq!(result.summary.rows, 0);
    }

    #[test]
    fn pnk_compare_small_table() {
        let spec = ExperimentSpec::PnkCompare(PnkCompareSpec {
            seed: 8,
            trials: 200_000,
            n: vec![2, 3],
            d: vec![3, 4],
        });
        let result = run_pnk_compare(&spec).unwrap();
        let Rows::PnkCompare(rows) = &result.rows else { panic!() };
        assert_eq!(rows.len(), 2 * (3 + 4));
        assert!(rows.iter().all(|r| r.pass));
        let r = rows.iter().find(|r| (r.n, r.k, r.d) == (3, 1, 3)).unwrap();
        assert_eq!(r.formula_exact, "2/9");
        assert!((r.wrong_estimate - 1.0 / 6.0).abs() <= 4.0 * r.wrong_std_error);
        assert!((r.all_estimate - 17.0 / 27.0).abs() <= 4.0 * r.all_std_error);
        let r = rows.iter().find(|r| (r.n, r.k, r.d) == (3, 3, 4)).unwrap();
        assert_eq!((r.formula, r.wrong_estimate, r.all_estimate), (1.0, 1.0, 1.0));
    }

    #[test]
    fn solver_benchmark_edge_cases() {
        let base = SolverBenchmarkSpec {
            seed: 4,
            instances: 5,
            n: 1,
            accuracy_range: [0.55, 0.95],
            time_range: [1.0, 5.0],
            budget_fraction: 1.0,
            restarts: 3,
            scheme: "classical".into(),
            weight_exponent: 1.0,
            stop: "fixed".into(),
        };
        let result = run_solver_benchmark(&ExperimentSpec::SolverBenchmark(base.clone())).unwrap();
        assert_eq!(result.summary.hit_rate, Some(1.0));

        let zero = SolverBenchmarkSpec {
            n: 6,
            budget_fraction: 0.0,
            ..base
        };
        let result = run_solver_benchmark(&ExperimentSpec::SolverBenchmark(zero)).unwrap();
        let Rows::SolverBenchmark(rows) = &result.rows else { panic!() };
        assert!(rows.iter().all(|r| r.hit && r.exhaustive_members.is_empty()));
    }

    #[test]
    fn spec_json_is_strict() {
        let ok = r#"{"kind":"pnk_compare","seed":1,"trials":10,"n":[2],"d":[3]}"#;
        assert!(serde_json::from_str::<ExperimentSpec>(ok).is_ok());
        let typo = r#"{"kind":"pnk_compare","seed":1,"trails":10,"n":[2],"d":[3]}"#;
        assert!(serde_json::from_str::<ExperimentSpec>(typo).is_err());
        let bad_kind = r#"{"kind":"nope","seed":1}"#;
        assert!(serde_json::from_str::<ExperimentSpec>(bad_kind).is_err());
    }
}
