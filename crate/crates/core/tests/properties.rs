//! Property tests for the numeric invariants of the boosting arithmetic.
//! The heavier statistical suites live in `acceptance.rs`.

use proptest::prelude::*;

use qboost_core::boostcore::{adaboost_update, alpha_from_eps, weighted_error, WeightVector};
use qboost_core::concepts::{
    best_stump, candidate_hypotheses, feature_bit, sample_based_stump, Concept, ConceptClass,
    Hypothesis, Polarity, Sampler, TrainingSet,
};
use qboost_core::estimators::{estimate_error, ErrorOracleMode};
use qboost_core::qboost::{update_no, update_yes};
use qboost_core::qsim::{make_example_state, pe_distribution, AeBranch, NoiseBudget, QueryLedger};
use qboost_core::seeded_rng;

fn arb_set_and_weights() -> impl Strategy<Value = (TrainingSet, Vec<f64>)> {
    (2usize..=4)
        .prop_flat_map(|n| {
            let domain = 1u32 << n;
            (
                Just(n),
                proptest::collection::vec(any::<bool>(), 1usize << n),
                proptest::collection::vec(0..domain, 1..=16),
            )
        })
        .prop_flat_map(|(n, table, xs)| {
            let labels: Vec<i8> = table.iter().map(|&b| if b { 1 } else { -1 }).collect();
            let concept = Concept::from_table(n, labels).unwrap();
            let points: Vec<(u32, i8)> = xs.iter().map(|&x| (x, concept.label(x))).collect();
            let m = points.len();
            (
                Just(TrainingSet::new(n, points, Sampler::Uniform).unwrap()),
                proptest::collection::vec(0.01f64..1.0, m),
            )
        })
}

/// Independent exhaustive minimizer over all stumps and constants, written
/// without touching the library's candidate enumeration.
fn oracle_min_error(s: &TrainingSet, w: &[f64]) -> f64 {
    let n = s.n();
    let total: f64 = w.iter().sum();
    let mut best = f64::INFINITY;
    for f in 0..n {
        for pol in [1i8, -1] {
            let err: f64 = s
                .points()
                .iter()
                .enumerate()
                .filter(|(_, &(x, y))| {
                    let pred = if feature_bit(x, n, f) == 1 { pol } else { -pol };
                    pred != y
                })
                .map(|(i, _)| w[i])
                .sum();
            best = best.min(err / total);
        }
    }
    for c in [1i8, -1] {
        let err: f64 = s
            .points()
            .iter()
            .enumerate()
            .filter(|(_, &(_, y))| c != y)
            .map(|(i, _)| w[i])
            .sum();
        best = best.min(err / total);
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn best_stump_is_an_exact_minimizer((s, w) in arb_set_and_weights()) {
        let d = WeightVector::from_vec(w.clone()).unwrap();
        let (_, eps) = best_stump(&s, &d).unwrap();
        let oracle = oracle_min_error(&s, &w);
        prop_assert!((eps - oracle).abs() < 1e-12, "impl {eps} vs oracle {oracle}");
        // No candidate achieves a strictly smaller error.
        let total = d.sum();
        for h in candidate_hypotheses(s.n()) {
            let e = weighted_error(&d, &h, &s).unwrap() / total;
            prop_assert!(e + 1e-12 >= eps);
        }
        // The constants guarantee at most 1/2.
        prop_assert!(eps <= 0.5 + 1e-12);
    }

    #[test]
    fn exact_update_is_a_distribution_and_balances((s, w) in arb_set_and_weights()) {
        let d = WeightVector::from_vec(w).unwrap().normalized().unwrap();
        let (h, eps) = best_stump(&s, &d).unwrap();
        prop_assume!(eps > 0.0 && eps < 0.5);
        let alpha = alpha_from_eps(eps).unwrap();
        let (next, _z) = adaboost_update(&d, &h, &s, alpha).unwrap();
        prop_assert!((next.sum() - 1.0).abs() <= 1e-12);
        // The updated weighted error of the same hypothesis is exactly 1/2.
        let balanced = weighted_error(&next, &h, &s).unwrap();
        prop_assert!((balanced - 0.5).abs() <= 1e-9, "balance {balanced}");
    }

    #[test]
    fn branch_updates_match_their_mass_closed_forms(
        (s, w) in arb_set_and_weights(),
        scale in 0.3f64..1.0,
        eps_prime in 0.001f64..0.75,
    ) {
        let total: f64 = w.iter().sum();
        let sub: Vec<f64> = w.iter().map(|x| x * scale / total).collect();
        let dtilde = WeightVector::from_vec(sub).unwrap();
        let mass = dtilde.sum();
        let h = Hypothesis::Stump { feature: 0, polarity: Polarity::Plus };
        let eps = weighted_error(&dtilde, &h, &s).unwrap();
        let budget = NoiseBudget::new(4, 10, s.m()).unwrap();

        let yes = update_yes(&dtilde, &h, &s, eps_prime, &budget).unwrap();
        let want = ((mass - eps) / (1.0 - eps_prime) + eps / eps_prime)
            / (2.0 * (1.0 + 2.0 * budget.delta));
        prop_assert!((yes.sum() - want).abs() < 1e-12, "yes mass {} want {want}", yes.sum());

        let no = update_no(&dtilde, &h, &s, &budget).unwrap();
        let tau = budget.tau;
        let want = (mass - eps) * (1.0 - tau / 2.0) / ((1.0 + 2.0 * tau) * (1.0 - tau))
            + eps / (2.0 * (1.0 + 2.0 * tau));
        prop_assert!((no.sum() - want).abs() < 1e-12, "no mass {} want {want}", no.sum());
    }

    #[test]
    fn envelope_oracles_always_satisfy_the_contract_shape(
        (s, w) in arb_set_and_weights(),
        scale in 0.5f64..1.0,
        mode_high in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let total: f64 = w.iter().sum();
        let dtilde =
            WeightVector::from_vec(w.iter().map(|x| x * scale / total).collect()).unwrap();
        let h = Hypothesis::Stump { feature: 0, polarity: Polarity::Plus };
        let budget = NoiseBudget::new(4, 10, s.m()).unwrap();
        let eps = weighted_error(&dtilde, &h, &s).unwrap();
        let mode = if mode_high {
            ErrorOracleMode::AdversarialHigh
        } else {
            ErrorOracleMode::Synthetic
        };
        let mut rng = seeded_rng(seed);
        let mut ledger = QueryLedger::new();
        let out = estimate_error(mode, &dtilde, &h, &s, &budget, &mut rng, &mut ledger).unwrap();
        match out.branch {
            AeBranch::Yes => {
                prop_assert!((eps - out.estimate).abs() <= budget.delta * out.estimate + 1e-15)
            }
            AeBranch::No => prop_assert!((eps - out.estimate).abs() <= budget.tau + 1e-15),
        }
    }

    #[test]
    fn shattering_dimension_is_monotone_under_class_growth(
        tables in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 8), 1..=6),
        extra in proptest::collection::vec(any::<bool>(), 8),
    ) {
        let to_concept = |bits: &Vec<bool>| {
            Concept::from_table(3, bits.iter().map(|&b| if b { 1 } else { -1 }).collect()).unwrap()
        };
        let members: Vec<Concept> = tables.iter().map(to_concept).collect();
        let domain: Vec<u32> = (0..8).collect();
        let small = ConceptClass::new(3, members.clone()).unwrap();
        let d_small = qboost_core::concepts::vc_dimension_bruteforce(&small, &domain).unwrap();
        let mut grown = members;
        grown.push(to_concept(&extra));
        let big = ConceptClass::new(3, grown).unwrap();
        let d_big = qboost_core::concepts::vc_dimension_bruteforce(&big, &domain).unwrap();
        prop_assert!(d_big >= d_small);
    }

    #[test]
    fn pe_tables_normalize(theta_frac in 0.0f64..=1.0, n_anc in 1u32..=8) {
        let theta = theta_frac * std::f64::consts::FRAC_PI_2;
        let total: f64 = pe_distribution(theta, n_anc).iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10, "total {total}");
    }
}

/// Sample-consuming learner converges to the exact minimizer as the copy
/// count grows (zero-residual state, fixed non-uniform weights).
#[test]
fn sample_based_learner_converges_with_copies() {
    let c = Concept::majority(3, 3).unwrap();
    let points = (0..8u32).map(|x| (x, c.label(x))).collect();
    let s = TrainingSet::new(3, points, Sampler::Uniform).unwrap();
    let raw: Vec<f64> = (1..=8).map(|i| i as f64).collect();
    let d = WeightVector::from_vec(raw).unwrap().normalized().unwrap();
    let (_, eps_star) = best_stump(&s, &d).unwrap();
    let mut ledger = QueryLedger::new();
    let state = make_example_state(&d, 1, &mut ledger).unwrap();
    for (copies, tol, seed) in [
        (100usize, 0.15, 21u64),
        (1000, 0.05, 22),
        (10_000, 0.02, 23),
    ] {
        let mut rng = seeded_rng(seed);
        let h = sample_based_stump(&s, &state, copies, &mut rng).unwrap();
        let eps = weighted_error(&d, &h, &s).unwrap();
        assert!(
            (eps - eps_star).abs() <= tol,
            "copies {copies}: error {eps} vs exact {eps_star}"
        );
    }
}
