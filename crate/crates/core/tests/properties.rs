use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mvk_core::knapsack::{evaluate_subset, solve_exhaustive, solve_stochastic, Ensemble, Scheme, SolveRequest};
use mvk_core::pnk::{classical_profile, pnk_closed_form, PnkRequest};
use mvk_core::report::{parse_pool, pool_to_json};
use mvk_core::theory::{beta_fit_moments, expected_accuracy, CdfSpec};
use mvk_core::voting::{
    q_binary, q_bruteforce_oracle, q_multi, success_count_distribution, Classifier, ClassifierPool,
    VotingProfile,
};

fn accuracies(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 1..=max_len)
}

fn monotone_profile(n: usize) -> impl Strategy<Value = VotingProfile> {
    prop::collection::vec(0.0f64..=1.0, n + 1).prop_map(|mut c| {
        c.sort_by(f64::total_cmp);
        VotingProfile::new(c).unwrap()
    })
}

fn pool_with_profile(max_len: usize) -> impl Strategy<Value = (Vec<f64>, VotingProfile)> {
    accuracies(max_len).prop_flat_map(|acc| {
        let n = acc.len();
        (Just(acc), monotone_profile(n))
    })
}

fn pool_strategy(max_len: usize) -> impl Strategy<Value = ClassifierPool> {
    prop::collection::vec((0.3f64..0.97, 0.5f64..10.0), 1..=max_len).prop_map(|items| {
        ClassifierPool::new(
            items
                .into_iter()
                .enumerate()
                .map(|(i, (p, t))| Classifier::new(format!("m{i:02}"), p, t).unwrap())
                .collect(),
        )
        .unwrap()
    })
}

fn scheme_strategy() -> impl Strategy<Value = Scheme> {
    prop_oneof![
        Just(Scheme::Classical),
        (2usize..=5).prop_map(Scheme::Pnk),
        Just(Scheme::Cdf(CdfSpec::Arcsine)),
        (0.5f64..4.0, 0.5f64..4.0).prop_map(|(a, b)| Scheme::Cdf(CdfSpec::beta(a, b).unwrap())),
    ]
}

/// Best accuracy over every nonempty subset that fits.
fn naive_optimum(pool: &ClassifierPool, budget: f64, scheme: &Scheme) -> Option<f64> {
    let m = pool.members();
    let mut best: Option<f64> = None;
    for mask in 1u32..(1 << m.len()) {
        let picked: Vec<&Classifier> = (0..m.len()).filter(|i| mask >> i & 1 == 1).map(|i| &m[i]).collect();
        if picked.iter().map(|c| c.time).sum::<f64>() > budget {
            continue;
        }
        let subset = Ensemble::new(picked.iter().map(|c| c.id.clone())).unwrap();
        let q = evaluate_subset(pool, &subset, scheme).unwrap();
        best = Some(best.map_or(q, |b: f64| b.max(q)));
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn count_distribution_is_normalized(acc in accuracies(40)) {
        let dist = success_count_distribution(&acc).unwrap();
        prop_assert_eq!(dist.mass().len(), acc.len() + 1);
        prop_assert!(dist.mass().iter().all(|&m| m >= 0.0));
        prop_assert!((dist.mass().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fast_evaluation_matches_subset_sum((acc, profile) in pool_with_profile(12)) {
        let fast = q_multi(&acc, &profile).unwrap();
        let slow = q_bruteforce_oracle(&acc, &profile).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
    }

    #[test]
    fn classical_profile_reduces_to_binary(acc in accuracies(30)) {
        let multi = q_multi(&acc, &classical_profile(acc.len()).unwrap()).unwrap();
        prop_assert!((multi - q_binary(&acc).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn accuracy_stays_within_profile_range((acc, profile) in pool_with_profile(20)) {
        let q = q_multi(&acc, &profile).unwrap();
        let c = profile.coefficients();
        prop_assert!(q >= c[0] - 1e-12 && q <= c[c.len() - 1] + 1e-12);
    }

    #[test]
    fn better_member_never_hurts(
        (acc, profile) in pool_with_profile(15),
        which in any::<prop::sample::Index>(),
        lift in 0.0f64..=1.0,
    ) {
        let i = which.index(acc.len());
        let mut raised = acc.clone();
        raised[i] += (1.0 - raised[i]) * lift;
        let before = q_multi(&acc, &profile).unwrap();
        let after = q_multi(&raised, &profile).unwrap();
        prop_assert!(after >= before - 1e-12, "{before} -> {after}");
    }

    #[test]
    fn cdfs_are_distribution_functions(
        a in 0.2f64..8.0,
        b in 0.2f64..8.0,
        alpha in 0.05f64..0.95,
        ys in prop::collection::vec(0.0f64..=1.0, 2..20),
    ) {
        let mut ys = ys;
        ys.sort_by(f64::total_cmp);
        for cdf in [
            CdfSpec::Arcsine,
            CdfSpec::StepMajority,
            CdfSpec::beta(a, b).unwrap(),
            CdfSpec::generalized_arcsine(alpha).unwrap(),
        ] {
            prop_assert_eq!(cdf.eval(1.0).unwrap(), 1.0);
            let values: Vec<f64> = ys.iter().map(|&y| cdf.eval(y).unwrap()).collect();
            prop_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{cdf}: {values:?}");
        }
    }

    #[test]
    fn expected_accuracy_approaches_cdf(a in 1.0f64..5.0, b in 1.0f64..5.0, mu in 0.05f64..0.95) {
        let cdf = CdfSpec::beta(a, b).unwrap();
        let limit = cdf.eval(mu).unwrap();
        let small = expected_accuracy(&cdf, mu, 11).unwrap();
        let large = expected_accuracy(&cdf, mu, 4001).unwrap();
        prop_assert!((large - limit).abs() <= 0.01, "gap {}", (large - limit).abs());
        prop_assert!((large - limit).abs() <= (small - limit).abs() + 1e-12);
    }

    #[test]
    fn pnk_values_are_probabilities(n in 1usize..=9, d in 2usize..=5, k_frac in 0.0f64..=1.0) {
        let k = ((n as f64) * k_frac).round() as usize;
        let v = pnk_closed_form(PnkRequest::new(n, k, d).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&v.value));
        if k == n {
            prop_assert_eq!(v.value, 1.0);
        }
    }

    #[test]
    fn pool_document_round_trips(pool in pool_strategy(30)) {
        prop_assert_eq!(parse_pool(&pool_to_json(&pool)).unwrap(), pool);
    }

    #[test]
    fn scheme_text_round_trips(scheme in scheme_strategy()) {
        prop_assert_eq!(scheme.to_string().parse::<Scheme>().unwrap(), scheme);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exhaustive_matches_naive_enumeration(
        pool in pool_strategy(10),
        fraction in 0.0f64..=1.0,
        scheme in scheme_strategy(),
    ) {
        let budget = pool.total_time() * fraction;
        let report = solve_exhaustive(&SolveRequest::new(pool.clone(), budget, scheme.clone())).unwrap();
        match naive_optimum(&pool, budget, &scheme) {
            None => prop_assert!(report.infeasible && report.best.is_empty()),
            Some(best) => {
                prop_assert!((report.accuracy - best).abs() <= 1e-12);
                prop_assert!(report.total_time <= budget);
                let check = evaluate_subset(&pool, &report.best, &scheme).unwrap();
                prop_assert_eq!(check, report.accuracy);
            }
        }
    }

    #[test]
    fn optimum_grows_with_budget(pool in pool_strategy(10), f1 in 0.0f64..=1.0, f2 in 0.0f64..=1.0) {
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let total = pool.total_time();
        let small = solve_exhaustive(&SolveRequest::new(pool.clone(), total * lo, Scheme::Classical)).unwrap();
        let large = solve_exhaustive(&SolveRequest::new(pool, total * hi, Scheme::Classical)).unwrap();
        prop_assert!(large.accuracy >= small.accuracy);
    }

    #[test]
    fn perfect_free_member_reaches_certainty(pool in pool_strategy(9), fraction in 0.0f64..=1.0) {
        let mut members = pool.members().to_vec();
        members.push(Classifier::new("oracle", 1.0, 0.0).unwrap());
        let pool = ClassifierPool::new(members).unwrap();
        let budget = pool.total_time() * fraction;
        let report = solve_exhaustive(&SolveRequest::new(pool, budget, Scheme::Classical)).unwrap();
        prop_assert_eq!(report.accuracy, 1.0);
        prop_assert!(report.best.member_ids().iter().any(|id| id == "oracle"));
    }

    #[test]
    fn stochastic_never_beats_exhaustive(
        pool in pool_strategy(10),
        fraction in 0.05f64..=1.0,
        scheme in scheme_strategy(),
        seed in any::<u64>(),
    ) {
        let mut req = SolveRequest::new(pool, 0.0, scheme);
        req.budget = req.pool.total_time() * fraction;
        req.restarts = 20;
        req.seed = seed;
        let exact = solve_exhaustive(&req).unwrap();
        let heuristic = solve_stochastic(&req).unwrap();
        prop_assert!(heuristic.accuracy <= exact.accuracy);
        prop_assert!(heuristic.total_time <= req.budget);
        prop_assert_eq!(heuristic.infeasible, exact.infeasible);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn beta_fit_recovers_parameters(a in 0.5f64..6.0, b in 0.5f64..6.0, seed in any::<u64>()) {
        let truth = CdfSpec::beta(a, b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws: Vec<f64> = (0..100_000).map(|_| truth.sample(&mut rng)).collect();
        let CdfSpec::Beta { a: fa, b: fb } = beta_fit_moments(&draws).unwrap() else {
            panic!("fit did not return a Beta");
        };
        prop_assert!((fa - a).abs() / a <= 0.05, "a: {a} fitted {fa}");
        prop_assert!((fb - b).abs() / b <= 0.05, "b: {b} fitted {fb}");
    }
}
