//! Experiment orchestration: seeded runs, per-round CSVs, the JSON summary,
//! plot-ready convergence data, and aligned mode comparisons.

use std::fmt::Write as _;
use std::fs;

use qboost_core::boostcore::{empirical_error, RoundRecord};
use qboost_core::concepts::{generate_training_set, Concept, Sampler, WeakLearnerSpec};
use qboost_core::error::Error as CoreError;
use qboost_core::estimators::ErrorOracleMode;
use qboost_core::qboost::{run_quantum_boost_with_budget, QBoostOutcome};
use qboost_core::qsim::{NoiseBudget, RoundQueries};
use qboost_core::seeded_rng;
use qboost_core::verify::{
    branch_normalizer, check_all_yes_bound, check_eps_gap, check_fidelity, check_subnormalization,
    check_training_bound, ClaimReport,
};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;

/// How a command failed, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    WeakLearning(String),
    Io(String),
    Other(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::WeakLearning(_) => 3,
            Failure::Io(_) => 4,
            Failure::Other(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::WeakLearning(m) | Failure::Io(m) | Failure::Other(m) => m,
        }
    }
}

fn io_err(e: std::io::Error, what: &str) -> Failure {
    Failure::Io(format!("{what}: {e}"))
}

fn core_err(e: CoreError) -> Failure {
    match e {
        CoreError::WeakLearningViolation { .. } => Failure::WeakLearning(e.to_string()),
        other => Failure::Other(other.to_string()),
    }
}

pub struct SeedRun {
    pub seed: u64,
    pub outcome: Result<SeedSummary, String>,
    pub weak_learning_violation: bool,
}

pub struct SeedSummary {
    pub records: Vec<RoundRecord>,
    pub ensemble_lines: String,
    pub train_err: f64,
    pub heldout_err: f64,
    pub queries: u64,
    pub ledger_totals: RoundQueries,
    pub termination: &'static str,
    pub no_rounds: usize,
}

fn run_seed(
    cfg: &ExperimentConfig,
    concept: &Concept,
    sampler: &Sampler,
    learner: WeakLearnerSpec,
    oracle: ErrorOracleMode,
    rounds: usize,
    seed: u64,
) -> Result<SeedSummary, CoreError> {
    let mut rng = seeded_rng(seed);
    let s = generate_training_set(concept, sampler, cfg.m, &mut rng)?;
    let budget = NoiseBudget::new(cfg.q, rounds, s.m())?;
    let out: QBoostOutcome = run_quantum_boost_with_budget(&s, learner, oracle, budget, &mut rng)?;
    let train_err = empirical_error(&out.ensemble, s.points(), None)?;
    let heldout = generate_training_set(concept, sampler, cfg.m, &mut rng)?;
    let heldout_err = empirical_error(&out.ensemble, heldout.points(), None)?;
    let no_rounds = out
        .records
        .iter()
        .filter(|r| !r.branch.is_yes_shaped())
        .count();
    Ok(SeedSummary {
        queries: out.ledger.grand_total(),
        ledger_totals: out.ledger.totals(),
        ensemble_lines: out.ensemble.to_lines(),
        termination: out.termination.as_str(),
        no_rounds,
        records: out.records,
        train_err,
        heldout_err,
    })
}

fn run_all_seeds(
    cfg: &ExperimentConfig,
    oracle: ErrorOracleMode,
    rounds: usize,
) -> Result<Vec<SeedRun>, Failure> {
    let concept = cfg
        .build_concept()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let sampler = cfg
        .build_sampler()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let learner = cfg
        .build_learner()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let outcome = run_seed(cfg, &concept, &sampler, learner, oracle, rounds, seed);
        let weak = matches!(outcome, Err(CoreError::WeakLearningViolation { .. }));
        runs.push(SeedRun {
            seed,
            outcome: outcome.map_err(|e| e.to_string()),
            weak_learning_violation: weak,
        });
    }
    Ok(runs)
}

pub const CSV_HEADER: &str =
    "t,branch,eps_tilde,eps_prime,eps_true,alpha_prime,Z,sum_Dtilde,fidelity,train_err,queries";

fn round_csv(records: &[RoundRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.branch,
            r.eps_tilde,
            r.eps_prime,
            r.eps_true,
            r.alpha_prime,
            r.z,
            r.sum_dtilde,
            r.fidelity,
            r.train_err,
            r.queries
        )
        .expect("writing to string");
    }
    out
}

/// Running training-error bound: product of branch-adjusted normalizers with
/// one extra (q rounds^2) factor per floored round.
fn cumulative_bounds(records: &[RoundRecord], budget: &NoiseBudget) -> Vec<f64> {
    let mut bound = 1.0;
    records
        .iter()
        .map(|r| {
            bound *= branch_normalizer(r, budget);
            if !r.branch.is_yes_shaped() {
                bound *= budget.qt2();
            }
            bound
        })
        .collect()
}

fn convergence_dat(runs: &[SeedRun], budget: &NoiseBudget) -> String {
    let max_rounds = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|s| s.records.len()))
        .max()
        .unwrap_or(0);
    let mut out = String::from("# t train_err bound\n");
    for t in 0..max_rounds {
        let mut errs = Vec::new();
        let mut bounds = Vec::new();
        for run in runs {
            if let Ok(summary) = &run.outcome {
                if summary.records.is_empty() {
                    continue;
                }
                let idx = t.min(summary.records.len() - 1);
                errs.push(summary.records[idx].train_err);
                bounds.push(cumulative_bounds(&summary.records, budget)[idx]);
            }
        }
        if errs.is_empty() {
            break;
        }
        let mean_err = errs.iter().sum::<f64>() / errs.len() as f64;
        let mean_bound = bounds.iter().sum::<f64>() / bounds.len() as f64;
        writeln!(out, "{} {} {}", t + 1, mean_err, mean_bound).expect("writing to string");
    }
    out
}

fn claim_json(report: &ClaimReport) -> Value {
    let aux: serde_json::Map<String, Value> = report
        .aux
        .iter()
        .map(|(k, v)| (k.clone(), json!(v)))
        .collect();
    json!({
        "claim": report.claim.as_str(),
        "total": report.total,
        "failed": report.failed,
        "ok": report.ok,
        "worst_slack": report.worst_slack,
        "aux": aux,
    })
}

fn claims_over_runs(runs: &[SeedRun], budget: &NoiseBudget) -> Vec<Value> {
    let mut all: Vec<&[RoundRecord]> = Vec::new();
    for run in runs {
        if let Ok(summary) = &run.outcome {
            all.push(&summary.records);
        }
    }
    let mut merged: Vec<ClaimReport> = Vec::new();
    for records in &all {
        let reports = [
            check_subnormalization(records, budget.delta),
            check_eps_gap(records, budget.delta),
            check_fidelity(records, budget),
            check_training_bound(records, budget),
            check_all_yes_bound(records, budget),
        ];
        if merged.is_empty() {
            merged = reports.to_vec();
        } else {
            for (m, r) in merged.iter_mut().zip(&reports) {
                m.merge(r);
            }
        }
    }
    merged.iter().map(claim_json).collect()
}

fn config_json(cfg: &ExperimentConfig, rounds: usize) -> Value {
    json!({
        "concept": cfg.concept,
        "n": cfg.n,
        "sampler": cfg.sampler,
        "m": cfg.m,
        "rounds": rounds,
        "q": cfg.q,
        "gamma_floor": cfg.gamma_floor,
        "oracle": cfg.oracle.to_string(),
        "learner": cfg.learner_label(),
        "seeds": cfg.seeds,
        "t_multiplier": cfg.t_multiplier,
        "verify": cfg.verify,
    })
}

fn seed_json(run: &SeedRun, n: usize) -> Value {
    match &run.outcome {
        Ok(s) => json!({
            "seed": run.seed,
            "rounds": s.records.len(),
            "termination": s.termination,
            "train_err": s.train_err,
            "heldout_err": s.heldout_err,
            "no_rounds": s.no_rounds,
            "queries": s.queries,
            "ledger": {
                "amplification": s.ledger_totals.amplification,
                "estimation": s.ledger_totals.estimation,
                "hypothesis": s.ledger_totals.hypothesis,
                "state_prep": s.ledger_totals.state_prep,
            },
            "ensemble": {"n": n, "terms": s.ensemble_lines.lines().collect::<Vec<_>>()},
        }),
        Err(e) => json!({"seed": run.seed, "error": e}),
    }
}

/// Run one configuration across its seeds, writing `round_<seed>.csv`,
/// `summary.json`, and `convergence.dat` under the output directory.
/// Returns the one-line status value and the exit code (0, or 3 if any seed
/// aborted with a weak-learning violation).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Value, i32), Failure> {
    cfg.check_supported()
        .map_err(|e| Failure::WeakLearning(e.to_string()))?;
    let rounds = cfg.rounds();
    let budget = NoiseBudget::new(cfg.q, rounds, cfg.m).map_err(core_err)?;
    let runs = run_all_seeds(cfg, cfg.oracle, rounds)?;

    fs::create_dir_all(&cfg.out).map_err(|e| io_err(e, "creating output directory"))?;
    for run in &runs {
        if let Ok(summary) = &run.outcome {
            let path = cfg.out.join(format!("round_{}.csv", run.seed));
            fs::write(&path, round_csv(&summary.records))
                .map_err(|e| io_err(e, "writing round csv"))?;
        }
    }
    fs::write(
        cfg.out.join("convergence.dat"),
        convergence_dat(&runs, &budget),
    )
    .map_err(|e| io_err(e, "writing convergence.dat"))?;

    let ok_errs: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|s| s.train_err))
        .collect();
    let mean_train = if ok_errs.is_empty() {
        f64::NAN
    } else {
        ok_errs.iter().sum::<f64>() / ok_errs.len() as f64
    };
    let frac_le_tenth = ok_errs.iter().filter(|&&e| e <= 0.1).count() as f64 / runs.len() as f64;
    let mean_queries = {
        let qs: Vec<u64> = runs
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|s| s.queries))
            .collect();
        if qs.is_empty() {
            0.0
        } else {
            qs.iter().sum::<u64>() as f64 / qs.len() as f64
        }
    };

    let claims = if cfg.verify {
        claims_over_runs(&runs, &budget)
    } else {
        Vec::new()
    };
    let claims_ok = claims.iter().all(|c| c["ok"].as_bool().unwrap_or(false));

    let summary = json!({
        "config": config_json(cfg, rounds),
        "budget": {"delta": budget.delta, "tau": budget.tau},
        "seeds": runs.iter().map(|r| seed_json(r, cfg.n)).collect::<Vec<_>>(),
        "aggregate": {
            "mean_train_err": mean_train,
            "frac_train_le_tenth": frac_le_tenth,
            "mean_queries": mean_queries,
            "failed_seeds": runs.iter().filter(|r| r.outcome.is_err()).count(),
        },
        "claims": claims,
    });
    fs::write(
        cfg.out.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )
    .map_err(|e| io_err(e, "writing summary.json"))?;

    let violation = runs.iter().any(|r| r.weak_learning_violation);
    let status = json!({
        "status": if violation { "weak-learning-violation" } else { "ok" },
        "command": "run",
        "out": cfg.out.display().to_string(),
        "seeds": runs.len(),
        "mean_train_err": mean_train,
        "frac_train_le_tenth": frac_le_tenth,
        "claims_ok": if cfg.verify { json!(claims_ok) } else { Value::Null },
    });
    Ok((status, if violation { 3 } else { 0 }))
}

/// Run the same configuration across several oracle modes on shared seeds,
/// writing one aligned long-format table `compare.csv`.
pub fn compare_modes(
    cfg: &ExperimentConfig,
    modes: &[ErrorOracleMode],
) -> Result<(Value, i32), Failure> {
    cfg.check_supported()
        .map_err(|e| Failure::WeakLearning(e.to_string()))?;
    let rounds = cfg.rounds();
    let budget = NoiseBudget::new(cfg.q, rounds, cfg.m).map_err(core_err)?;

    let mut table = String::from(
        "mode,seed,t,branch,eps_tilde,eps_prime,z_prime,cum_bound,train_err,cum_queries\n",
    );
    let mut per_mode = serde_json::Map::new();
    let mut violation = false;
    for &mode in modes {
        let runs = run_all_seeds(cfg, mode, rounds)?;
        violation |= runs.iter().any(|r| r.weak_learning_violation);
        let mut finals = Vec::new();
        let mut totals = Vec::new();
        for run in &runs {
            if let Ok(summary) = &run.outcome {
                let bounds = cumulative_bounds(&summary.records, &budget);
                let mut cum_queries = 0u64;
                for (r, bound) in summary.records.iter().zip(&bounds) {
                    cum_queries += r.queries;
                    writeln!(
                        table,
                        "{},{},{},{},{},{},{},{},{},{}",
                        mode,
                        run.seed,
                        r.t,
                        r.branch,
                        r.eps_tilde,
                        r.eps_prime,
                        branch_normalizer(r, &budget),
                        bound,
                        r.train_err,
                        cum_queries
                    )
                    .expect("writing to string");
                }
                finals.push(summary.train_err);
                totals.push(summary.queries);
            }
        }
        let mean_err = finals.iter().sum::<f64>() / finals.len().max(1) as f64;
        let mean_queries = totals.iter().sum::<u64>() as f64 / totals.len().max(1) as f64;
        per_mode.insert(
            mode.to_string(),
            json!({"mean_train_err": mean_err, "mean_queries": mean_queries}),
        );
    }

    fs::create_dir_all(&cfg.out).map_err(|e| io_err(e, "creating output directory"))?;
    fs::write(cfg.out.join("compare.csv"), table).map_err(|e| io_err(e, "writing compare.csv"))?;

    let status = json!({
        "status": if violation { "weak-learning-violation" } else { "ok" },
        "command": "compare",
        "out": cfg.out.display().to_string(),
        "modes": per_mode,
    });
    Ok((status, if violation { 3 } else { 0 }))
}
