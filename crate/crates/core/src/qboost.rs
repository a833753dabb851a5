//! The robust boosting driver: learn, estimate, branch-dependent update.
//!
//! Each round updates a sub-normalized weight vector. A Yes-branch round
//! applies the multiplicative update with the estimate in place of the true
//! error, damped by 1/(1+2 delta); a No-branch round applies the floored
//! update, which shifts weight toward correctly classified points:
//!
//! ```text
//! yes:  w'_x = w_x / ((1+2 delta) Z) * e^{-+ alpha'}          Z = 2 sqrt(eps'(1-eps'))
//! no:   w'_x = w_x / ((1+2 tau)   Z) * (2-tau) e^{-alpha'}    (correct points)
//!       w'_x = w_x / ((1+2 tau)   Z) *   tau   e^{+alpha'}    (misclassified)
//! ```
//!
//! with eps' = tau and alpha' = ln sqrt(1/tau - 1) in the floored branch.
//! Alongside the working vector the driver tracks the true distribution it
//! approximates: the same branch update, exactly normalized. The mass of the
//! working vector, the gap between the two error measures, and the overlap
//! between the two vectors are the run's checkable guarantees; see `verify`.

use rand::Rng;

use crate::boostcore::{
    alpha_from_eps, consistent_alpha_cap, weighted_error, z_factor, Branch, Ensemble, RoundRecord,
    WeightVector, DISTRIBUTION_TOL,
};
use crate::concepts::{
    best_stump, sample_based_stump, Hypothesis, LearnerMode, TrainingSet, WeakLearnerSpec,
};
use crate::error::{Error, Result};
use crate::estimators::{estimate_error, ErrorOracleMode};
use crate::numeric::comp_sum;
use crate::qsim::{make_example_state, AeBranch, NoiseBudget, QueryLedger};

/// Yes-branch update. Correct points scale by 1/(2(1+2 delta)(1-eps')),
/// misclassified ones by 1/(2(1+2 delta) eps').
pub fn update_yes(
    dtilde: &WeightVector,
    h: &Hypothesis,
    s: &TrainingSet,
    eps_prime: f64,
    budget: &NoiseBudget,
) -> Result<WeightVector> {
    if !(eps_prime > 0.0 && eps_prime < 1.0) {
        return Err(Error::EstimateOutOfRange(eps_prime));
    }
    if dtilde.len() != s.m() {
        return Err(Error::LengthMismatch {
            left: dtilde.len(),
            right: s.m(),
        });
    }
    let damp = 1.0 + 2.0 * budget.delta;
    let f_correct = 1.0 / (2.0 * damp * (1.0 - eps_prime));
    let f_wrong = 1.0 / (2.0 * damp * eps_prime);
    let n = s.n();
    let w = s
        .points()
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            dtilde[i]
                * if h.predict(x, n) == y {
                    f_correct
                } else {
                    f_wrong
                }
        })
        .collect();
    WeightVector::from_vec(w)
}

/// No-branch (floored) update at eps' = tau.
pub fn update_no(
    dtilde: &WeightVector,
    h: &Hypothesis,
    s: &TrainingSet,
    budget: &NoiseBudget,
) -> Result<WeightVector> {
    let qt2 = budget.qt2();
    if qt2 <= 1.0 {
        return Err(Error::ParameterOutOfRange(format!(
            "q * rounds^2 = {qt2} too small"
        )));
    }
    if dtilde.len() != s.m() {
        return Err(Error::LengthMismatch {
            left: dtilde.len(),
            right: s.m(),
        });
    }
    let tau = 1.0 / qt2;
    let f_correct = (2.0 - tau) / (2.0 * (1.0 + 2.0 * tau) * (1.0 - tau));
    let f_wrong = 1.0 / (2.0 * (1.0 + 2.0 * tau));
    let n = s.n();
    let w = s
        .points()
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            dtilde[i]
                * if h.predict(x, n) == y {
                    f_correct
                } else {
                    f_wrong
                }
        })
        .collect();
    WeightVector::from_vec(w)
}

/// The exactly-normalized update the working vector approximates: scale by
/// e^{-+ alpha'} and divide by the empirical normalizer, so the result sums
/// to 1. Returns the normalizer alongside.
pub fn true_update(
    dtilde: &WeightVector,
    h: &Hypothesis,
    s: &TrainingSet,
    alpha_prime: f64,
) -> Result<(WeightVector, f64)> {
    if dtilde.len() != s.m() {
        return Err(Error::LengthMismatch {
            left: dtilde.len(),
            right: s.m(),
        });
    }
    if !alpha_prime.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("alpha {alpha_prime}")));
    }
    let n = s.n();
    let scaled: Vec<f64> = s
        .points()
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            dtilde[i] * (-alpha_prime * (y as f64) * (h.predict(x, n) as f64)).exp()
        })
        .collect();
    let z = comp_sum(scaled.iter().copied());
    assert!(z > 0.0, "normalizer vanished at finite alpha");
    Ok((
        WeightVector::from_vec(scaled.into_iter().map(|w| w / z).collect())?,
        z,
    ))
}

/// Per-round overlap between the yes-updated working vector and its
/// normalized counterpart, in closed form from the measured error mass and
/// the estimate. At eps' = eps this is 1/sqrt(1+2 delta).
pub fn yes_overlap_core(eps_tilde: f64, eps_prime: f64, delta: f64) -> f64 {
    (((1.0 - eps_tilde) / (1.0 - eps_prime) + eps_tilde / eps_prime) / (2.0 * (1.0 + 2.0 * delta)))
        .sqrt()
}

/// Per-round overlap for a floored round.
pub fn no_overlap_core(eps_tilde: f64, qt2: f64) -> f64 {
    let tau = 1.0 / qt2;
    (((1.0 - tau / 2.0) * (1.0 - eps_tilde) / (1.0 - tau) + eps_tilde / 2.0) / (1.0 + 2.0 * tau))
        .sqrt()
}

/// Running state of the robust driver.
#[derive(Debug, Clone)]
pub struct BoostState {
    pub t: usize,
    pub dtilde: WeightVector,
    pub d_true: WeightVector,
    pub history: Vec<(f64, Hypothesis, Branch)>,
    pub budget: NoiseBudget,
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    /// A zero-noise round found a consistent hypothesis; its weight was
    /// capped and the run ended early.
    ConsistentHypothesis,
    /// Floored rounds exceeded ell <= rounds/ln(2 sqrt(q) rounds) - 1; the
    /// run returns the ensemble of floored-round hypotheses, which already
    /// has small training error.
    FloorBudgetExhausted {
        no_rounds: usize,
    },
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::ConsistentHypothesis => "consistent-hypothesis",
            Termination::FloorBudgetExhausted { .. } => "floor-budget-exhausted",
        }
    }
}

/// Result of a full robust run.
#[derive(Debug, Clone)]
pub struct QBoostOutcome {
    pub ensemble: Ensemble,
    pub records: Vec<RoundRecord>,
    pub ledger: QueryLedger,
    pub termination: Termination,
    pub final_dtilde: WeightVector,
    pub final_d_true: WeightVector,
}

/// One step's verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QStep {
    Advanced,
    Done(Termination),
}

/// Stepping driver for the robust loop; one `step` is one full round.
pub struct QuantumBooster<'a, R: Rng> {
    s: &'a TrainingSet,
    learner: WeakLearnerSpec,
    oracle: ErrorOracleMode,
    rounds: usize,
    state: BoostState,
    ledger: QueryLedger,
    margins: Vec<f64>,
    records: Vec<RoundRecord>,
    no_rounds: usize,
    done: Option<Termination>,
    rng: R,
}

impl<'a, R: Rng> QuantumBooster<'a, R> {
    pub fn new(
        s: &'a TrainingSet,
        learner: WeakLearnerSpec,
        oracle: ErrorOracleMode,
        budget: NoiseBudget,
        rng: R,
    ) -> Result<Self> {
        if budget.rounds == 0 {
            return Err(Error::ParameterOutOfRange(
                "rounds must be at least 1".into(),
            ));
        }
        if budget.m != s.m() {
            return Err(Error::LengthMismatch {
                left: budget.m,
                right: s.m(),
            });
        }
        if s.m() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        Ok(QuantumBooster {
            s,
            learner,
            oracle,
            rounds: budget.rounds,
            state: BoostState {
                t: 0,
                dtilde: WeightVector::uniform(s.m()),
                d_true: WeightVector::uniform(s.m()),
                history: Vec::new(),
                budget,
            },
            ledger: QueryLedger::new(),
            margins: vec![0.0; s.m()],
            records: Vec::new(),
            no_rounds: 0,
            done: None,
            rng,
        })
    }

    pub fn state(&self) -> &BoostState {
        &self.state
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    fn floored_rounds_allowed(&self) -> f64 {
        let q = self.state.budget.q as f64;
        let t = self.rounds as f64;
        t / (2.0 * q.sqrt() * t).ln() - 1.0
    }

    /// Prepare the round's example state, with one retry on the simulated
    /// amplification failure event (probability 1/(3 rounds) per attempt).
    fn prepare_state(&mut self, t: usize) -> Result<crate::qsim::QuantumExampleState> {
        let p_fail = 1.0 / (3.0 * self.rounds as f64);
        let state = make_example_state(&self.state.dtilde, t, &mut self.ledger)?;
        if self.rng.random::<f64>() >= p_fail {
            return Ok(state);
        }
        let state = make_example_state(&self.state.dtilde, t, &mut self.ledger)?;
        if self.rng.random::<f64>() >= p_fail {
            return Ok(state);
        }
        Err(Error::AmplificationFailure(t))
    }

    fn learn(&mut self, state: &crate::qsim::QuantumExampleState, t: usize) -> Result<Hypothesis> {
        match self.learner.mode {
            LearnerMode::DistributionAware => {
                let normalized = self.state.dtilde.normalized()?;
                Ok(best_stump(self.s, &normalized)?.0)
            }
            LearnerMode::SampleBased { copies } => {
                match sample_based_stump(self.s, state, copies, &mut self.rng) {
                    Ok(h) => Ok(h),
                    Err(Error::AllResidual) => {
                        sample_based_stump(self.s, state, copies, &mut self.rng)
                            .map_err(|_| Error::LearnerFailure(t))
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }

    fn push_record(&mut self, rec: RoundRecord, alpha: f64, h: Hypothesis, branch: Branch) {
        let n = self.s.n();
        for (i, &(x, _)) in self.s.points().iter().enumerate() {
            self.margins[i] += alpha * h.predict(x, n) as f64;
        }
        let train_err = self
            .s
            .points()
            .iter()
            .enumerate()
            .filter(|(i, &(_, y))| (if self.margins[*i] >= 0.0 { 1 } else { -1 }) != y)
            .count() as f64
            / self.s.m() as f64;
        self.records.push(RoundRecord { train_err, ..rec });
        self.state.history.push((alpha, h, branch));
    }

    pub fn step(&mut self) -> Result<QStep> {
        if let Some(term) = self.done {
            return Ok(QStep::Done(term));
        }
        if self.state.t >= self.rounds {
            self.done = Some(Termination::Completed);
            return Ok(QStep::Done(Termination::Completed));
        }
        let t = self.state.t + 1;
        let budget = self.state.budget;
        let m = self.s.m();

        self.ledger.begin_round();
        self.ledger
            .charge_state_prep((m as f64).log2().ceil() as u64 + 1);
        let example_state = self.prepare_state(t)?;
        let h = self.learn(&example_state, t)?;

        let eps_tilde = weighted_error(&self.state.dtilde, &h, self.s)?;
        let mass_in = self.state.dtilde.sum();
        let eps_true = eps_tilde / mass_in;
        if eps_true >= 0.5 - DISTRIBUTION_TOL {
            return Err(Error::WeakLearningViolation {
                round: t,
                eps: eps_true,
            });
        }

        let q = budget.q as u64;
        self.ledger.charge_hypothesis((q + 1) * (t as u64 - 1)); // state prep queries
        self.ledger.charge_hypothesis(q * (t as u64 - 1)); // uncomputation

        let outcome = estimate_error(
            self.oracle,
            &self.state.dtilde,
            &h,
            self.s,
            &budget,
            &mut self.rng,
            &mut self.ledger,
        )?;
        // Each estimation query re-derives the weight register from the full
        // hypothesis history, so it costs t hypothesis-oracle queries.
        self.ledger
            .charge_hypothesis(outcome.queries_used * t as u64);

        let branch = match outcome.branch {
            AeBranch::Yes if self.oracle == ErrorOracleMode::Exact => Branch::Exact,
            AeBranch::Yes => Branch::Yes,
            AeBranch::No => Branch::No,
        };

        if branch.is_yes_shaped() && outcome.estimate == 0.0 {
            // Zero-noise oracle met a consistent hypothesis; cap its weight.
            let alpha = consistent_alpha_cap(m, self.rounds);
            let queries = self.ledger.current_round().total();
            self.state.t = t;
            self.push_record(
                RoundRecord {
                    t,
                    branch,
                    eps_tilde,
                    eps_prime: 0.0,
                    eps_true,
                    alpha_prime: alpha,
                    z: 0.0,
                    sum_dtilde: mass_in,
                    fidelity: 1.0,
                    train_err: 0.0,
                    queries,
                },
                alpha,
                h,
                branch,
            );
            self.done = Some(Termination::ConsistentHypothesis);
            return Ok(QStep::Done(Termination::ConsistentHypothesis));
        }

        let (alpha, next, shadow, fid) = match branch {
            Branch::Exact | Branch::Yes => {
                let eps_prime = outcome.estimate;
                if !(eps_prime > 0.0 && eps_prime < 1.0) {
                    return Err(Error::EstimateOutOfRange(eps_prime));
                }
                let alpha = alpha_from_eps(eps_prime)?;
                let next = update_yes(&self.state.dtilde, &h, self.s, eps_prime, &budget)?;
                let (shadow, _z) = true_update(&self.state.dtilde, &h, self.s, alpha)?;
                let fid = yes_overlap_core(eps_tilde, eps_prime, budget.delta);
                (alpha, next, shadow, fid)
            }
            Branch::No => {
                let qt2 = budget.qt2();
                let alpha = (qt2 - 1.0).sqrt().ln();
                let next = update_no(&self.state.dtilde, &h, self.s, &budget)?;
                // The tracked distribution carries the floored branch's
                // reweighting, exactly normalized.
                let shadow = next.normalized()?;
                let fid = no_overlap_core(eps_tilde, qt2);
                self.no_rounds += 1;
                (alpha, next, shadow, fid)
            }
        };

        debug_assert!((shadow.sum() - 1.0).abs() < 1e-10);
        let sum_dtilde = next.sum();
        let queries = self.ledger.current_round().total();
        self.state.t = t;
        self.state.dtilde = next;
        self.state.d_true = shadow;
        self.push_record(
            RoundRecord {
                t,
                branch,
                eps_tilde,
                eps_prime: outcome.estimate,
                eps_true,
                alpha_prime: alpha,
                z: z_factor(outcome.estimate),
                sum_dtilde,
                fidelity: fid,
                train_err: 0.0,
                queries,
            },
            alpha,
            h,
            branch,
        );

        if branch == Branch::No && self.no_rounds as f64 > self.floored_rounds_allowed() {
            let term = Termination::FloorBudgetExhausted {
                no_rounds: self.no_rounds,
            };
            self.done = Some(term);
            return Ok(QStep::Done(term));
        }
        if self.state.t >= self.rounds {
            self.done = Some(Termination::Completed);
            return Ok(QStep::Done(Termination::Completed));
        }
        Ok(QStep::Advanced)
    }

    pub fn finish(self) -> QBoostOutcome {
        let termination = self.done.unwrap_or(Termination::Completed);
        let terms: Vec<(f64, Hypothesis)> = match termination {
            Termination::FloorBudgetExhausted { .. } => self
                .state
                .history
                .iter()
                .filter(|(_, _, b)| *b == Branch::No)
                .map(|&(a, h, _)| (a, h))
                .collect(),
            _ => self.state.history.iter().map(|&(a, h, _)| (a, h)).collect(),
        };
        QBoostOutcome {
            ensemble: Ensemble::new(self.s.n(), terms),
            records: self.records,
            ledger: self.ledger,
            termination,
            final_dtilde: self.state.dtilde,
            final_d_true: self.state.d_true,
        }
    }
}

/// Run the robust loop with the standard budget delta = 1/(10 q rounds^2).
pub fn run_quantum_boost<R: Rng>(
    s: &TrainingSet,
    learner: WeakLearnerSpec,
    rounds: usize,
    q: usize,
    oracle: ErrorOracleMode,
    rng: R,
) -> Result<QBoostOutcome> {
    let budget = NoiseBudget::new(q, rounds, s.m())?;
    run_quantum_boost_with_budget(s, learner, oracle, budget, rng)
}

/// Run the robust loop with an explicit budget (e.g. the zero-noise one).
pub fn run_quantum_boost_with_budget<R: Rng>(
    s: &TrainingSet,
    learner: WeakLearnerSpec,
    oracle: ErrorOracleMode,
    budget: NoiseBudget,
    rng: R,
) -> Result<QBoostOutcome> {
    let mut booster = QuantumBooster::new(s, learner, oracle, budget, rng)?;
    loop {
        if let QStep::Done(_) = booster.step()? {
            return Ok(booster.finish());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boostcore::empirical_error;
    use crate::concepts::{Concept, Polarity, Sampler};
    use crate::seeded_rng;

    fn maj3_set() -> TrainingSet {
        let c = Concept::majority(3, 3).unwrap();
        let points = (0..8u32).map(|x| (x, c.label(x))).collect();
        TrainingSet::new(3, points, Sampler::Uniform).unwrap()
    }

    fn quarter_wrong_fixture() -> (TrainingSet, Hypothesis, WeightVector) {
        // Uniform on 4 points with the stump wrong on exactly one.
        let c = Concept::dictator(2, 0).unwrap();
        let mut points: Vec<(u32, i8)> = (0..4u32).map(|x| (x, c.label(x))).collect();
        points[3].1 = -1;
        let s = TrainingSet::new(2, points, Sampler::Uniform).unwrap();
        let h = Hypothesis::Stump {
            feature: 0,
            polarity: Polarity::Plus,
        };
        (s, h, WeightVector::uniform(4))
    }

    fn aware() -> WeakLearnerSpec {
        WeakLearnerSpec::new(LearnerMode::DistributionAware, 0.25).unwrap()
    }

    #[test]
    fn update_yes_exact_estimate_mass() {
        let (s, h, d) = quarter_wrong_fixture();
        let budget = NoiseBudget::new(4, 10, 4).unwrap();
        let eps = weighted_error(&d, &h, &s).unwrap();
        let next = update_yes(&d, &h, &s, eps, &budget).unwrap();
        let expect = 1.0 / (1.0 + 2.0 * budget.delta);
        assert!((next.sum() - expect).abs() < 1e-14, "sum {}", next.sum());
        // Scaled copy of the classical update.
        let damp = 1.0 + 2.0 * budget.delta;
        for (i, want) in [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5].iter().enumerate() {
            assert!((next[i] * damp - want).abs() < 1e-14);
        }
    }

    #[test]
    fn update_yes_zero_delta_is_classical() {
        let (s, h, d) = quarter_wrong_fixture();
        let budget = NoiseBudget::degenerate(4, 10, 4);
        let eps = weighted_error(&d, &h, &s).unwrap();
        let next = update_yes(&d, &h, &s, eps, &budget).unwrap();
        assert!((next.sum() - 1.0).abs() < 1e-14);
        let alpha = alpha_from_eps(eps).unwrap();
        let (classical, _) = crate::boostcore::adaboost_update(&d, &h, &s, alpha).unwrap();
        for i in 0..4 {
            assert!((next[i] - classical[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn update_no_consistent_hypothesis_mass() {
        let c = Concept::dictator(2, 0).unwrap();
        let points = (0..4u32).map(|x| (x, c.label(x))).collect();
        let s = TrainingSet::new(2, points, Sampler::Uniform).unwrap();
        let h = Hypothesis::Stump {
            feature: 0,
            polarity: Polarity::Plus,
        };
        let d = WeightVector::uniform(4);
        let budget = NoiseBudget::new(4, 10, 4).unwrap();
        let tau = budget.tau;
        let next = update_no(&d, &h, &s, &budget).unwrap();
        let per_weight = (2.0 - tau) / (2.0 * (1.0 + 2.0 * tau) * (1.0 - tau));
        for i in 0..4 {
            assert!((next[i] - 0.25 * per_weight).abs() < 1e-16);
        }
        let expect_sum = (1.0 - tau / 2.0) / ((1.0 + 2.0 * tau) * (1.0 - tau));
        assert!((next.sum() - expect_sum).abs() < 1e-14);
    }

    #[test]
    fn update_no_error_mass_at_floor() {
        // Error mass exactly tau: the closed-form total is 1/(1+2 tau).
        let (s, h, _) = quarter_wrong_fixture();
        let budget = NoiseBudget::new(4, 10, 4).unwrap();
        let tau = budget.tau;
        // Rescale so the single wrong point carries mass tau and the three
        // correct points carry (1 - tau) together.
        let w = vec![(1.0 - tau) / 3.0, (1.0 - tau) / 3.0, (1.0 - tau) / 3.0, tau];
        let d = WeightVector::from_vec(w).unwrap();
        assert!((weighted_error(&d, &h, &s).unwrap() - tau).abs() < 1e-18);
        let next = update_no(&d, &h, &s, &budget).unwrap();
        assert!(
            (next.sum() - 1.0 / (1.0 + 2.0 * tau)).abs() < 1e-14,
            "sum {}",
            next.sum()
        );
    }

    #[test]
    fn update_no_passes_zeros_through() {
        let (s, h, _) = quarter_wrong_fixture();
        let budget = NoiseBudget::new(4, 10, 4).unwrap();
        let zeros = WeightVector::from_vec(vec![0.0; 4]).unwrap();
        let next = update_no(&zeros, &h, &s, &budget).unwrap();
        assert!(next.as_slice().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn true_update_cases() {
        let (s, h, d) = quarter_wrong_fixture();
        // alpha = 0 renormalizes only.
        let sub = WeightVector::from_vec(vec![0.2, 0.2, 0.2, 0.2]).unwrap();
        let (t0, z0) = true_update(&sub, &h, &s, 0.0).unwrap();
        assert!((z0 - 0.8).abs() < 1e-15);
        for i in 0..4 {
            assert!((t0[i] - 0.25).abs() < 1e-15);
        }
        // Exact estimate: matches the classical update.
        let alpha = alpha_from_eps(0.25).unwrap();
        let (t1, _) = true_update(&d, &h, &s, alpha).unwrap();
        for (i, want) in [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5].iter().enumerate() {
            assert!((t1[i] - want).abs() < 1e-15);
        }
        assert!((t1.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_core_matches_pointwise_fidelity_from_unit_mass() {
        // Starting from a true distribution, the pointwise overlap between
        // the damped update and its normalized counterpart equals the yes
        // closed form; at eps' = eps both reduce to 1/sqrt(1+2 delta).
        let (s, h, d) = quarter_wrong_fixture();
        let budget = NoiseBudget::new(4, 10, 4).unwrap();
        let eps = weighted_error(&d, &h, &s).unwrap();
        for eps_prime in [eps, 0.2, 0.3] {
            let sub = update_yes(&d, &h, &s, eps_prime, &budget).unwrap();
            let alpha = alpha_from_eps(eps_prime).unwrap();
            let (truth, _) = true_update(&d, &h, &s, alpha).unwrap();
            let direct = crate::qsim::fidelity(&sub, &truth).unwrap();
            let core = yes_overlap_core(eps, eps_prime, budget.delta);
            assert!(
                (direct - core).abs() < 1e-12,
                "eps'={eps_prime}: {direct} vs {core}"
            );
        }
        let at_exact = crate::qsim::fidelity(
            &update_yes(&d, &h, &s, eps, &budget).unwrap(),
            &true_update(&d, &h, &s, alpha_from_eps(eps).unwrap())
                .unwrap()
                .0,
        )
        .unwrap();
        assert!((at_exact - 1.0 / (1.0 + 2.0 * budget.delta).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn overlap_cores_known_values() {
        let delta = 1.0 / 4000.0;
        let v = yes_overlap_core(0.25, 0.25, delta);
        assert!((v - 1.0 / (1.0 + 2.0 * delta).sqrt()).abs() < 1e-15);
        assert!((yes_overlap_core(0.3, 0.3, 0.0) - 1.0).abs() < 1e-15);
        let qt2 = 400.0;
        let tau = 1.0 / qt2;
        let v = no_overlap_core(tau, qt2);
        assert!((v - 1.0 / (1.0 + 2.0 * tau).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn qsim_run_reaches_low_training_error() {
        let s = maj3_set();
        let out =
            run_quantum_boost(&s, aware(), 40, 4, ErrorOracleMode::QSim, seeded_rng(1)).unwrap();
        let err = empirical_error(&out.ensemble, s.points(), None).unwrap();
        assert!(err <= 0.1, "training error {err}");
        assert_eq!(out.termination, Termination::Completed);
    }

    #[test]
    fn run_is_bit_reproducible() {
        let s = maj3_set();
        let a =
            run_quantum_boost(&s, aware(), 20, 4, ErrorOracleMode::QSim, seeded_rng(9)).unwrap();
        let b =
            run_quantum_boost(&s, aware(), 20, 4, ErrorOracleMode::QSim, seeded_rng(9)).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.eps_prime.to_bits(), y.eps_prime.to_bits());
            assert_eq!(x.sum_dtilde.to_bits(), y.sum_dtilde.to_bits());
            assert_eq!(x.queries, y.queries);
        }
    }

    #[test]
    fn floored_runs_terminate_within_budget() {
        // A realizable concept keeps the error mass at zero, so every round
        // takes the floored branch until the guard trips.
        let c = Concept::dictator(3, 0).unwrap();
        let points = (0..8u32).map(|x| (x, c.label(x))).collect();
        let s = TrainingSet::new(3, points, Sampler::Uniform).unwrap();
        let out =
            run_quantum_boost(&s, aware(), 10, 4, ErrorOracleMode::QSim, seeded_rng(3)).unwrap();
        match out.termination {
            Termination::FloorBudgetExhausted { no_rounds } => assert_eq!(no_rounds, 2),
            other => panic!("unexpected termination {other:?}"),
        }
        // The returned ensemble is the floored-round hypotheses and is
        // already consistent.
        assert_eq!(
            empirical_error(&out.ensemble, s.points(), None).unwrap(),
            0.0
        );
        // Mass window survives both floored updates.
        let budget = NoiseBudget::new(4, 10, 8).unwrap();
        for r in &out.records {
            assert!(
                r.sum_dtilde >= 1.0 - 30.0 * budget.delta,
                "round {}: {}",
                r.t,
                r.sum_dtilde
            );
            assert!(r.sum_dtilde <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn parity_aborts_with_violation() {
        let c = Concept::parity(3).unwrap();
        let points = (0..8u32).map(|x| (x, c.label(x))).collect();
        let s = TrainingSet::new(3, points, Sampler::Uniform).unwrap();
        let err = run_quantum_boost(&s, aware(), 10, 4, ErrorOracleMode::Exact, seeded_rng(0));
        assert!(matches!(
            err,
            Err(Error::WeakLearningViolation { round: 1, .. })
        ));
    }

    #[test]
    fn sampled_learner_round_trip() {
        let s = maj3_set();
        let spec = WeakLearnerSpec::new(LearnerMode::SampleBased { copies: 256 }, 0.2).unwrap();
        let out =
            run_quantum_boost(&s, spec, 20, 256, ErrorOracleMode::QSim, seeded_rng(5)).unwrap();
        let err = empirical_error(&out.ensemble, s.points(), None).unwrap();
        assert!(err <= 0.25, "training error {err}");
    }
}
