//! Acceptance suite: every quantitative guarantee of the engine, checked at
//! its stated tolerance. One pass/fail line per criterion; run with
//! `cargo test -p qboost-core --test acceptance -- --nocapture` to see them.

use std::time::Instant;

use qboost_core::boostcore::{empirical_error, run_adaboost, AdaBooster, Branch, RoundRecord};
use qboost_core::concepts::{Concept, LearnerMode, Sampler, TrainingSet, WeakLearnerSpec};
use qboost_core::estimators::ErrorOracleMode;
use qboost_core::numeric::ls_slope;
use qboost_core::qboost::{
    run_quantum_boost, run_quantum_boost_with_budget, QStep, QuantumBooster,
};
use qboost_core::qsim::NoiseBudget;
use qboost_core::seeded_rng;
use qboost_core::verify::{
    case1_bound, check_all_yes_bound, check_eps_gap, check_fidelity, check_subnormalization,
    check_training_bound, deviation_harness, estimation_contract_harness, ClaimReport,
};

fn verdict(num: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {num:02} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn full_domain_set(concept: &Concept) -> TrainingSet {
    let n = concept.n();
    let points = (0..1u32 << n).map(|x| (x, concept.label(x))).collect();
    TrainingSet::new(n, points, Sampler::Uniform).unwrap()
}

fn maj3_over(n: usize) -> TrainingSet {
    full_domain_set(&Concept::majority(n, 3).unwrap())
}

fn aware() -> WeakLearnerSpec {
    WeakLearnerSpec::new(LearnerMode::DistributionAware, 0.25).unwrap()
}

#[test]
fn criterion_01_classical_zero_training_error() {
    let s = maj3_over(3);
    let start = Instant::now();
    let mut zero = 0;
    for seed in 0..50u64 {
        let (e, records) = run_adaboost(&s, aware(), 40, seeded_rng(seed)).unwrap();
        // Measured advantage at round 1 is exactly 1/4.
        assert!((records[0].eps_tilde - 0.25).abs() < 1e-15);
        if empirical_error(&e, s.points(), None).unwrap() == 0.0 {
            zero += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = zero == 50 && elapsed.as_secs_f64() < 1.0;
    verdict(
        1,
        "classical-zero-training-error",
        pass,
        &format!("{zero}/50 seeds at zero error in {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_simulated_oracle_training_error() {
    let s = maj3_over(3);
    let start = Instant::now();
    let mut low = 0;
    let mut zero = 0;
    for seed in 0..50u64 {
        // A failed run counts against the 2/3 target.
        if let Ok(out) =
            run_quantum_boost(&s, aware(), 40, 4, ErrorOracleMode::QSim, seeded_rng(seed))
        {
            let err = empirical_error(&out.ensemble, s.points(), None).unwrap();
            if err <= 0.1 {
                low += 1;
            }
            if err == 0.0 {
                zero += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    // The all-yes analytic bound at these parameters is already below 1/M,
    // so contract-abiding runs end at zero training error.
    let analytic = case1_bound(0.25, 40, 4);
    assert!(analytic < 1.0 / 8.0);
    let pass = low * 3 >= 2 * 50 && elapsed.as_secs_f64() < 300.0;
    verdict(
        2,
        "simulated-oracle-training-error",
        pass,
        &format!(
            "{low}/50 seeds at error <= 1/10 ({zero} at zero, analytic bound {analytic:.2e}) in {elapsed:.2?}"
        ),
    );
    assert!(pass);
}

struct Corpus {
    rounds: Vec<(Vec<RoundRecord>, NoiseBudget)>,
}

/// Randomized runs over M in {8, 32, 128} plus floored-branch coverage from
/// a realizable concept; at least 10^3 recorded rounds in total.
fn claims_corpus() -> Corpus {
    let mut rounds = Vec::new();
    for &n in &[3usize, 5, 7] {
        let s = maj3_over(n);
        for mode in [ErrorOracleMode::QSim, ErrorOracleMode::Synthetic] {
            for seed in 0..9u64 {
                let budget = NoiseBudget::new(4, 20, s.m()).unwrap();
                let out = run_quantum_boost_with_budget(
                    &s,
                    aware(),
                    mode,
                    budget,
                    seeded_rng(1000 + seed),
                )
                .unwrap();
                rounds.push((out.records, budget));
            }
        }
    }
    // Realizable concept: every round takes the floored branch until the
    // guard trips after two rounds.
    let s = full_domain_set(&Concept::dictator(3, 0).unwrap());
    for mode in [ErrorOracleMode::QSim, ErrorOracleMode::Synthetic] {
        for seed in 0..5u64 {
            let budget = NoiseBudget::new(4, 10, s.m()).unwrap();
            let out =
                run_quantum_boost_with_budget(&s, aware(), mode, budget, seeded_rng(2000 + seed))
                    .unwrap();
            rounds.push((out.records, budget));
        }
    }
    Corpus { rounds }
}

fn merge_over_corpus<F>(corpus: &Corpus, f: F) -> ClaimReport
where
    F: Fn(&[RoundRecord], &NoiseBudget) -> ClaimReport,
{
    let mut merged: Option<ClaimReport> = None;
    for (records, budget) in &corpus.rounds {
        let report = f(records, budget);
        match merged.as_mut() {
            Some(m) => m.merge(&report),
            None => merged = Some(report),
        }
    }
    merged.expect("corpus is nonempty")
}

#[test]
fn criteria_03_04_05_round_guarantees_over_corpus() {
    let corpus = claims_corpus();
    let total_rounds: usize = corpus.rounds.iter().map(|(r, _)| r.len()).sum();
    assert!(
        total_rounds >= 1000,
        "corpus holds only {total_rounds} rounds"
    );

    let mass = merge_over_corpus(&corpus, |r, b| check_subnormalization(r, b.delta));
    verdict(
        3,
        "mass-window",
        mass.ok,
        &format!(
            "{}/{} rounds in window, worst slack {:.3e}",
            mass.total - mass.failed,
            mass.total,
            mass.worst_slack
        ),
    );
    assert!(mass.ok);

    let gap = merge_over_corpus(&corpus, |r, b| check_eps_gap(r, b.delta));
    let sharper = gap
        .aux
        .iter()
        .find(|(k, _)| k == "yes-sharper-4delta-slack")
        .map(|(_, v)| *v)
        .unwrap_or(f64::NAN);
    verdict(
        4,
        "error-gap",
        gap.ok,
        &format!(
            "{}/{} rounds within 50 delta, worst slack {:.3e}, sharper yes-branch slack {:.3e}",
            gap.total - gap.failed,
            gap.total,
            gap.worst_slack,
            sharper
        ),
    );
    assert!(gap.ok);

    let fid = merge_over_corpus(&corpus, check_fidelity);
    verdict(
        5,
        "overlap-floor",
        fid.ok,
        &format!(
            "{}/{} rounds above per-branch floors, worst slack {:.3e}",
            fid.total - fid.failed,
            fid.total,
            fid.worst_slack
        ),
    );
    assert!(fid.ok);

    // Per-run training-error bounds: the position-free form, plus the
    // all-yes form at the measured advantage where it applies.
    let bound = merge_over_corpus(&corpus, check_training_bound);
    assert!(
        bound.ok,
        "training bound violated, worst slack {}",
        bound.worst_slack
    );
    let all_yes = merge_over_corpus(&corpus, check_all_yes_bound);
    assert!(
        all_yes.ok && all_yes.total > 0,
        "all-yes bound: {all_yes:?}"
    );

    // The corpus exercises both branches.
    let floored: usize = corpus
        .rounds
        .iter()
        .flat_map(|(r, _)| r.iter())
        .filter(|r| r.branch == Branch::No)
        .count();
    assert!(floored >= 10, "only {floored} floored rounds in corpus");
}

#[test]
fn criterion_06_estimation_contract() {
    let budget = NoiseBudget::new(4, 10, 32).unwrap();
    let tau = budget.tau;
    let grid = [1e-6, tau / 2.0, 2.0 * tau, 0.1, 0.4];
    let mut rng = seeded_rng(600);
    let report = estimation_contract_harness(&budget, &grid, 1000, &mut rng).unwrap();
    let rate_slack = report
        .aux
        .iter()
        .find(|(k, _)| k == "rate-slack")
        .unwrap()
        .1;
    let query_slack = report
        .aux
        .iter()
        .find(|(k, _)| k == "query-slack")
        .unwrap()
        .1;
    verdict(
        6,
        "estimation-contract",
        report.ok,
        &format!(
            "{} violations in {} trials, rate slack {:.3e}, query-cap slack {:.3e}",
            report.failed, report.total, rate_slack, query_slack
        ),
    );
    assert!(report.ok);
}

#[test]
fn criterion_07_estimate_deviation_bound() {
    let mut rng = seeded_rng(700);
    let report = deviation_harness(&[0.01, 0.1, 0.3, 0.5, 0.9], &[64, 1024], 10_000, &mut rng);
    let mean = report.aux.iter().find(|(k, _)| k == "mean-freq").unwrap().1;
    let slack = report
        .aux
        .iter()
        .find(|(k, _)| k == "freq-slack")
        .unwrap()
        .1;
    verdict(
        7,
        "estimate-deviation",
        report.ok,
        &format!("min freq slack over 2/3: {slack:.4}, mean freq {mean:.4}"),
    );
    assert!(report.ok);
    assert!(
        mean > 0.75,
        "mean frequency {mean} far from the expected ~0.81"
    );
}

#[test]
fn criterion_08_query_scaling() {
    let mut ln_m = Vec::new();
    let mut ln_q = Vec::new();
    for &n in &[4usize, 6, 8] {
        let s = maj3_over(n);
        let mut total = 0u64;
        let seeds = 5u64;
        for seed in 0..seeds {
            let out = run_quantum_boost(
                &s,
                aware(),
                10,
                4,
                ErrorOracleMode::QSim,
                seeded_rng(800 + seed),
            )
            .unwrap();
            total += out.ledger.grand_total();
        }
        ln_m.push((s.m() as f64).ln());
        ln_q.push((total as f64 / seeds as f64).ln());
    }
    let slope = ls_slope(&ln_m, &ln_q);
    let pass = (slope - 0.5).abs() <= 0.15;
    verdict(
        8,
        "query-scaling",
        pass,
        &format!("fitted exponent {slope:.3} over M in {{16,64,256}}"),
    );
    assert!(pass);
}

#[test]
fn criterion_09_zero_noise_equivalence() {
    let s = maj3_over(3);
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let mut classical = AdaBooster::new(&s, aware(), 40, seeded_rng(seed)).unwrap();
        let budget = NoiseBudget::degenerate(4, 40, s.m());
        let mut robust = QuantumBooster::new(
            &s,
            aware(),
            ErrorOracleMode::Exact,
            budget,
            seeded_rng(seed),
        )
        .unwrap();
        for round in 1..=40usize {
            use qboost_core::boostcore::StepOutcome;
            let a = classical.step().unwrap();
            let b = robust.step().unwrap();
            // Both must have executed the same round.
            assert_eq!(classical.records().len(), round);
            assert_eq!(robust.records().len(), round);
            let d_classical = classical.weights();
            let d_robust = &robust.state().dtilde;
            for i in 0..s.m() {
                worst = worst.max((d_classical[i] - d_robust[i]).abs());
            }
            let ra = classical.records().last().unwrap();
            let rb = robust.records().last().unwrap();
            worst = worst.max((ra.alpha_prime - rb.alpha_prime).abs());
            assert_eq!(ra.branch, Branch::Exact);
            assert_eq!(rb.branch, Branch::Exact);
            if matches!(a, StepOutcome::Finished | StepOutcome::ConsistentHypothesis)
                || matches!(b, QStep::Done(_))
            {
                break;
            }
        }
        let (e1, _) = classical.finish();
        let out = robust.finish();
        assert_eq!(
            e1.to_lines().lines().count(),
            out.ensemble.to_lines().lines().count()
        );
        for x in 0..8u32 {
            assert_eq!(e1.predict(x).unwrap(), out.ensemble.predict(x).unwrap());
        }
    }
    let pass = worst <= 1e-10;
    verdict(
        9,
        "zero-noise-equivalence",
        pass,
        &format!("max per-round trajectory deviation {worst:.3e} over 10 seeds"),
    );
    assert!(pass);
}

#[test]
fn criterion_10_robustness_at_envelope_edges() {
    let s = maj3_over(3);
    let mut details = String::new();
    let mut pass = true;
    for mode in [
        ErrorOracleMode::AdversarialHigh,
        ErrorOracleMode::AdversarialLow,
    ] {
        let mut low = 0;
        for seed in 0..50u64 {
            if let Ok(out) = run_quantum_boost(&s, aware(), 40, 4, mode, seeded_rng(100 + seed)) {
                if empirical_error(&out.ensemble, s.points(), None).unwrap() <= 0.1 {
                    low += 1;
                }
            }
        }
        pass &= low * 3 >= 2 * 50;
        details.push_str(&format!("{mode}: {low}/50  "));
    }
    verdict(10, "envelope-robustness", pass, details.trim());
    assert!(pass);
}
