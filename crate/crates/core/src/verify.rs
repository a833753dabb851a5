//! Claim checkers: the quantitative guarantees of the robust update, turned
//! into pass/fail reports over recorded rounds and Monte-Carlo trials.
//!
//! Checked guarantees, with delta the estimation tolerance and tau = 10 delta:
//!
//! ```text
//! mass window     sum(w') in [1 - 30 delta, 1]           every round
//! error gap       |eps_tilde - eps_true| <= 50 delta     every round
//! overlap floor   yes rounds  >= 1 - 2 delta
//!                 floored     >= 1 - 3 tau / 2           every round
//! contract        yes => |eps - eps'| <= delta eps'
//!                 no  => |eps - eps'| <= tau              rate >= 1 - 10 delta/T
//! deviation       |a~ - a| <= 2 pi sqrt(a(1-a))/J + pi^2/J^2   rate >= 2/3
//! ```
//!
//! Bounds are one-sided: a measured quantity must not exceed its bound;
//! slack is reported, never enforced as a lower bound.

use rand::Rng;

use crate::boostcore::RoundRecord;
use crate::error::Result;
use crate::qsim::{
    amplitude_estimate, modified_amplitude_estimation, AeBranch, NoiseBudget, QueryLedger,
};

/// Which guarantee a report covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimId {
    MassWindow,
    ErrorGap,
    OverlapFloor,
    EstimationContract,
    AllYesBound,
    MixedRoundsBound,
    EstimateDeviation,
}

impl ClaimId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClaimId::MassWindow => "mass-window",
            ClaimId::ErrorGap => "error-gap",
            ClaimId::OverlapFloor => "overlap-floor",
            ClaimId::EstimationContract => "estimation-contract",
            ClaimId::AllYesBound => "all-yes-bound",
            ClaimId::MixedRoundsBound => "mixed-rounds-bound",
            ClaimId::EstimateDeviation => "estimate-deviation",
        }
    }
}

/// Pass/fail summary for one guarantee. `worst_slack` is the smallest margin
/// to the bound observed, in the claim's native units; negative means a
/// violation. `aux` entries are slack-style as well (bigger is safer), so
/// reports merge by summing counts and taking minima.
#[derive(Debug, Clone)]
pub struct ClaimReport {
    pub claim: ClaimId,
    pub total: usize,
    pub failed: usize,
    pub ok: bool,
    pub worst_slack: f64,
    pub aux: Vec<(String, f64)>,
}

impl ClaimReport {
    fn new(claim: ClaimId) -> Self {
        ClaimReport {
            claim,
            total: 0,
            failed: 0,
            ok: true,
            worst_slack: f64::INFINITY,
            aux: Vec::new(),
        }
    }

    fn observe(&mut self, slack: f64) {
        self.total += 1;
        if slack < 0.0 {
            self.failed += 1;
            self.ok = false;
        }
        if slack < self.worst_slack {
            self.worst_slack = slack;
        }
    }

    fn push_aux(&mut self, key: &str, value: f64) {
        self.aux.push((key.to_string(), value));
    }

    pub fn merge(&mut self, other: &ClaimReport) {
        assert_eq!(self.claim, other.claim);
        self.total += other.total;
        self.failed += other.failed;
        self.ok &= other.ok;
        self.worst_slack = self.worst_slack.min(other.worst_slack);
        for (k, v) in &other.aux {
            match self.aux.iter_mut().find(|(key, _)| key == k) {
                Some((_, mine)) => *mine = mine.min(*v),
                None => self.aux.push((k.clone(), *v)),
            }
        }
    }
}

/// Post-update mass stays in [1 - 30 delta, 1 + 1e-12] on every round.
/// The slack reported is the margin to the lower edge, the substantive side;
/// exceeding the float-tolerance upper edge counts as a violation.
pub fn check_subnormalization(records: &[RoundRecord], delta: f64) -> ClaimReport {
    let mut report = ClaimReport::new(ClaimId::MassWindow);
    let lo = 1.0 - 30.0 * delta;
    let hi = 1.0 + 1e-12;
    for r in records {
        if r.sum_dtilde > hi {
            report.observe(hi - r.sum_dtilde);
        } else {
            report.observe(r.sum_dtilde - lo);
        }
    }
    report
}

/// |eps_tilde - eps_true| <= 50 delta on every round. Also reports the
/// sharper per-branch slack against 4 delta on yes rounds, without
/// asserting it.
pub fn check_eps_gap(records: &[RoundRecord], delta: f64) -> ClaimReport {
    let mut report = ClaimReport::new(ClaimId::ErrorGap);
    let bound = 50.0 * delta;
    let mut yes_sharp = f64::INFINITY;
    let mut no_slack = f64::INFINITY;
    for r in records {
        let gap = (r.eps_tilde - r.eps_true).abs();
        report.observe(bound - gap);
        if r.branch.is_yes_shaped() {
            yes_sharp = yes_sharp.min(4.0 * delta - gap);
        } else {
            no_slack = no_slack.min(bound - gap);
        }
    }
    report.push_aux("yes-sharper-4delta-slack", yes_sharp);
    report.push_aux("no-gap-slack", no_slack);
    report
}

/// Per-round overlap floors: 1 - 2 delta on yes rounds, 1 - 3/(2 q rounds^2)
/// on floored rounds.
pub fn check_fidelity(records: &[RoundRecord], budget: &NoiseBudget) -> ClaimReport {
    let mut report = ClaimReport::new(ClaimId::OverlapFloor);
    let yes_floor = 1.0 - 2.0 * budget.delta;
    let no_floor = 1.0 - 1.5 / budget.qt2();
    for r in records {
        let floor = if r.branch.is_yes_shaped() {
            yes_floor
        } else {
            no_floor
        };
        report.observe(r.fidelity - floor);
    }
    report
}

/// Branch-adjusted normalizer for one recorded round: (1+2 delta) Z on yes
/// rounds, (1+2 tau) Z on floored rounds.
pub fn branch_normalizer(r: &RoundRecord, budget: &NoiseBudget) -> f64 {
    if r.branch.is_yes_shaped() {
        (1.0 + 2.0 * budget.delta) * r.z
    } else {
        (1.0 + 2.0 * budget.tau) * r.z
    }
}

/// Position-free training-error bound: after any prefix of rounds with ell
/// floored rounds among them, the running training error is at most
/// (q rounds^2)^ell * prod Z'. Checked cumulatively over the records.
pub fn check_training_bound(records: &[RoundRecord], budget: &NoiseBudget) -> ClaimReport {
    let mut report = ClaimReport::new(ClaimId::MixedRoundsBound);
    let qt2 = budget.qt2();
    let mut bound = 1.0f64;
    for r in records {
        bound *= branch_normalizer(r, budget);
        if !r.branch.is_yes_shaped() {
            bound *= qt2;
        }
        report.observe(bound.min(1.0) - r.train_err + 1e-12);
    }
    report
}

/// exp(-2 T gamma^2 + 16/(q T)): the all-yes training-error bound.
pub fn case1_bound(gamma: f64, rounds: usize, q: usize) -> f64 {
    let t = rounds as f64;
    (-2.0 * t * gamma * gamma + 16.0 / (q as f64 * t)).exp()
}

/// For a run whose rounds all took the multiplicative branch: the final
/// training error is at most [`case1_bound`] evaluated at the smallest
/// per-round advantage 1/2 - eps_true actually measured. Vacuous (zero
/// observations) when the run contains floored rounds.
pub fn check_all_yes_bound(records: &[RoundRecord], budget: &NoiseBudget) -> ClaimReport {
    let mut report = ClaimReport::new(ClaimId::AllYesBound);
    if records.is_empty() || records.iter().any(|r| !r.branch.is_yes_shaped()) {
        return report;
    }
    let gamma_min = records
        .iter()
        .map(|r| 0.5 - r.eps_true)
        .fold(f64::INFINITY, f64::min);
    let last = records.last().expect("nonempty");
    let bound = case1_bound(gamma_min.max(0.0), records.len(), budget.q);
    report.observe(bound.min(1.0) - last.train_err + 1e-12);
    report.push_aux("gamma-min", gamma_min);
    report
}

/// exp(2 ell (ln(2 sqrt(q) T) + gamma^2) - 2 T gamma^2 + 1): the mixed-run
/// training-error bound in displayed form. Uninformative for small gamma;
/// pair with [`floored_regime_bound`] above the floored-round budget.
pub fn case2_bound(gamma: f64, rounds: usize, q: usize, ell: usize) -> f64 {
    let t = rounds as f64;
    let g2 = gamma * gamma;
    (2.0 * ell as f64 * ((2.0 * (q as f64).sqrt() * t).ln() + g2) - 2.0 * t * g2 + 1.0).exp()
}

/// (2 / (sqrt(q) T))^ell: the training-error bound when ell floored rounds
/// occurred; at ell >= T/ln(2 sqrt(q) T) this is already below 1/10.
pub fn floored_regime_bound(q: usize, rounds: usize, ell: usize) -> f64 {
    (2.0 / ((q as f64).sqrt() * rounds as f64)).powi(ell as i32)
}

/// Monte-Carlo harness for the estimation contract: runs the doubling loop
/// over an error grid, tabulating contract violations and the query cap.
/// Passes when every grid point's violation rate stays within
/// 10 delta / rounds + 3 sigma and no trial exceeds 2 j_max queries.
pub fn estimation_contract_harness<R: Rng>(
    budget: &NoiseBudget,
    eps_grid: &[f64],
    trials: usize,
    rng: &mut R,
) -> Result<ClaimReport> {
    let mut report = ClaimReport::new(ClaimId::EstimationContract);
    let p0 = 10.0 * budget.delta / budget.rounds as f64;
    let sigma = (p0 * (1.0 - p0) / trials as f64).sqrt();
    let rate_cap = p0 + 3.0 * sigma;
    let query_cap = 2 * budget.j_max();
    let yes_floor = (1.0 - budget.delta) / (64.0 * budget.qt2());
    let mut query_slack = f64::INFINITY;
    let mut rate_slack = f64::INFINITY;
    let mut floor_slack = f64::INFINITY;
    for &eps in eps_grid {
        let mut violations = 0usize;
        for _ in 0..trials {
            let mut ledger = QueryLedger::new();
            let out = modified_amplitude_estimation(eps, budget, rng, &mut ledger)?;
            let ok = match out.branch {
                AeBranch::Yes => {
                    floor_slack = floor_slack.min(out.estimate - yes_floor);
                    (eps - out.estimate).abs() <= budget.delta * out.estimate
                }
                AeBranch::No => (eps - out.estimate).abs() <= budget.tau,
            };
            report.observe(if ok { 1.0 } else { -1.0 });
            if !ok {
                violations += 1;
            }
            query_slack = query_slack.min(query_cap as f64 - out.queries_used as f64);
        }
        rate_slack = rate_slack.min(rate_cap - violations as f64 / trials as f64);
    }
    // Rate-based verdict: per-grid-point frequency within the allowance, the
    // query cap respected everywhere, and every accepted estimate above the
    // branch floor.
    report.ok = rate_slack >= 0.0 && query_slack >= 0.0 && floor_slack >= 0.0;
    report.push_aux("rate-slack", rate_slack);
    report.push_aux("query-slack", query_slack);
    report.push_aux("yes-floor-slack", floor_slack);
    Ok(report)
}

/// Monte-Carlo harness for the single-estimate deviation bound
/// |a~ - a| <= 2 pi sqrt(a(1-a))/J + pi^2/J^2, which must hold with
/// frequency at least 2/3 at every tested (a, J).
pub fn deviation_harness<R: Rng>(
    a_grid: &[f64],
    j_grid: &[u64],
    trials: usize,
    rng: &mut R,
) -> ClaimReport {
    let mut report = ClaimReport::new(ClaimId::EstimateDeviation);
    let mut freq_slack = f64::INFINITY;
    let mut freq_sum = 0.0;
    let mut cells = 0usize;
    for &a in a_grid {
        for &j in j_grid {
            let jf = j as f64;
            let bound = 2.0 * std::f64::consts::PI * (a * (1.0 - a)).sqrt() / jf
                + std::f64::consts::PI.powi(2) / (jf * jf);
            let mut ok = 0usize;
            let mut ledger = QueryLedger::new();
            for _ in 0..trials {
                let est = amplitude_estimate(a, j, rng, &mut ledger);
                let hit = (est - a).abs() <= bound;
                report.observe(if hit { 1.0 } else { -1.0 });
                if hit {
                    ok += 1;
                }
            }
            let freq = ok as f64 / trials as f64;
            freq_slack = freq_slack.min(freq - 2.0 / 3.0);
            freq_sum += freq;
            cells += 1;
        }
    }
    report.ok = freq_slack >= 0.0;
    report.push_aux("freq-slack", freq_slack);
    report.push_aux("mean-freq", freq_sum / cells as f64);
    report
}
