//! Exact simulation of the estimation machinery in the two-dimensional
//! invariant subspace. Amplification and estimation statistics depend only on
//! the scalar amplitude a = eps/M, so no multi-register state is ever
//! materialized; outcome distributions are computed in closed form and
//! sampled exactly.
//!
//! Phase-estimation statistics: with n ancillas and phase angle theta, the
//! outcome y in {0..2^n-1} has
//!
//! ```text
//! Pr[y] = |(1/2^n) sum_k exp(i k (2 theta - 2 pi y / 2^n))|^2
//!       = prod_{j=0}^{n-1} cos^2( pi (2^j u - y / 2^{n-j}) ),   u = theta/pi
//! ```
//!
//! The product form factorizes over the bits of y, so outcomes are sampled
//! bit by bit from exact conditionals in O(n) per draw. Angles are reduced
//! mod 1 in 96-bit fixed point (u held in double-double precision) because a
//! plain f64 `2^j * u` loses the fractional part entirely for large j.

use rand::Rng;

use crate::boostcore::{WeightVector, DISTRIBUTION_TOL};
use crate::error::{Error, Result};
use crate::numeric::comp_sum;

const MASK96: u128 = (1u128 << 96) - 1;
const TWO_POW_96: f64 = 79228162514264337593543950336.0;

/// theta/pi as a 96-bit binary fraction. theta must lie in [0, pi/2], so the
/// value is in [0, 1/2]. Computed in double-double so every bit is faithful.
fn phase_fixed_u96(theta: f64) -> u128 {
    debug_assert!((0.0..=std::f64::consts::FRAC_PI_2 * (1.0 + 1e-12)).contains(&theta));
    const INV_PI_HI: f64 = std::f64::consts::FRAC_1_PI;
    const INV_PI_LO: f64 = -1.967_867_667_518_248_6e-17;
    let p = theta * INV_PI_HI;
    let err = theta.mul_add(INV_PI_HI, -p); // exact product residual
    let lo = theta.mul_add(INV_PI_LO, err);
    let hi_scaled = p * TWO_POW_96; // exact: power-of-two scaling
    let hi = hi_scaled as u128;
    let lo_scaled = (lo * TWO_POW_96).round() as i64;
    hi.wrapping_add(lo_scaled as i128 as u128) & MASK96
}

#[inline]
fn frac96_to_angle(x: u128) -> f64 {
    std::f64::consts::PI * (x as f64) / TWO_POW_96
}

/// Outcome distribution of phase estimation with `n_anc` ancillas at phase
/// angle `theta`. Returns the full 2^n_anc probability table.
pub fn pe_distribution(theta: f64, n_anc: u32) -> Vec<f64> {
    assert!(
        (1..=30).contains(&n_anc),
        "ancilla count {n_anc} out of range"
    );
    let n = n_anc as usize;
    let u = phase_fixed_u96(theta);
    let size = 1usize << n;
    let mut table = Vec::with_capacity(size);
    for y in 0..size as u64 {
        let mut p = 1.0f64;
        for j in 0..n as u32 {
            let shift = 96 - (n as u32 - j);
            let x = u
                .wrapping_shl(j)
                .wrapping_sub((y as u128).wrapping_shl(shift))
                & MASK96;
            let c = frac96_to_angle(x).cos();
            p *= c * c;
        }
        table.push(p);
    }
    table
}

/// Draw one phase-estimation outcome, bit by bit from exact conditionals.
pub fn pe_sample<R: Rng>(theta: f64, n_anc: u32, rng: &mut R) -> u64 {
    assert!(
        (1..=48).contains(&n_anc),
        "ancilla count {n_anc} out of range"
    );
    let u = phase_fixed_u96(theta);
    let mut bits: u64 = 0;
    for m in 0..n_anc {
        let x = u
            .wrapping_shl(n_anc - 1 - m)
            .wrapping_sub((bits as u128).wrapping_shl(95 - m))
            & MASK96;
        let s = frac96_to_angle(x).sin();
        if rng.random::<f64>() < s * s {
            bits |= 1 << m;
        }
    }
    bits
}

/// Estimate an amplitude `a` with `j` queries: phase estimation on
/// theta = arcsin(sqrt(a)) with ceil(log2 j) ancillas. Charges `j` queries
/// to the ledger's estimation counter.
pub fn amplitude_estimate<R: Rng>(a: f64, j: u64, rng: &mut R, ledger: &mut QueryLedger) -> f64 {
    assert!((0.0..=1.0).contains(&a), "amplitude {a} out of range");
    assert!(j >= 1);
    let n_anc = ceil_log2(j).max(1);
    let theta = a.sqrt().asin();
    let y = pe_sample(theta, n_anc, rng);
    ledger.charge_estimation(j);
    let frac = y as f64 / (1u64 << n_anc) as f64;
    let s = (std::f64::consts::PI * frac).sin();
    s * s
}

fn ceil_log2(x: u64) -> u32 {
    debug_assert!(x >= 1);
    64 - (x - 1).leading_zeros().min(64)
}

/// Scalar noise parameters of a boosting run: estimation tolerance delta,
/// floor tau = 10 delta, learner cost q, round count, training size.
#[derive(Debug, Clone, Copy)]
pub struct NoiseBudget {
    pub delta: f64,
    pub tau: f64,
    pub q: usize,
    pub rounds: usize,
    pub m: usize,
}

impl NoiseBudget {
    pub fn new(q: usize, rounds: usize, m: usize) -> Result<Self> {
        if q == 0 || rounds == 0 || m == 0 {
            return Err(Error::ParameterOutOfRange(
                "q, rounds and m must all be at least 1".into(),
            ));
        }
        let qt2 = (q as f64) * (rounds as f64) * (rounds as f64);
        if qt2 <= 1.0 {
            return Err(Error::ParameterOutOfRange(
                "q * rounds^2 must exceed 1 for the floored branch".into(),
            ));
        }
        Ok(NoiseBudget {
            delta: 0.1 / qt2,
            tau: 1.0 / qt2,
            q,
            rounds,
            m,
        })
    }

    /// Zero-noise budget: exact estimates, no floor. Only meaningful with
    /// the exact oracle; the estimation loop requires delta > 0.
    pub fn degenerate(q: usize, rounds: usize, m: usize) -> Self {
        NoiseBudget {
            delta: 0.0,
            tau: 0.0,
            q,
            rounds,
            m,
        }
    }

    pub fn qt2(&self) -> f64 {
        (self.q as f64) * (self.rounds as f64) * (self.rounds as f64)
    }

    /// Estimates at or above this value take the multiplicative branch.
    pub fn yes_threshold(&self) -> f64 {
        (1.0 - 2.0 * self.delta) / (64.0 * self.qt2())
    }

    /// First query count of the doubling loop.
    pub fn j_init(&self) -> u64 {
        assert!(self.delta > 0.0);
        (2.0 * std::f64::consts::PI * (self.m as f64).sqrt() / self.delta).ceil() as u64
    }

    /// Last query count the doubling loop may use.
    pub fn j_hi(&self) -> u64 {
        assert!(self.delta > 0.0);
        (16.0
            * std::f64::consts::SQRT_2
            * std::f64::consts::PI
            * (self.m as f64).sqrt()
            * self.qt2().sqrt()
            / self.delta)
            .ceil() as u64
    }

    /// Independent estimates per pass; the median is kept. This is what makes
    /// each pass reliable enough for the loop's overall failure budget.
    pub fn repeats(&self) -> u64 {
        assert!(self.delta > 0.0);
        (((self.m * self.rounds) as f64 / self.delta).log2().ceil() as u64).max(1)
    }

    /// Query cap for one estimation call: 2 * j_max bounds the doubling loop.
    pub fn j_max(&self) -> u64 {
        self.j_hi() * self.repeats()
    }
}

/// Verdict of the doubling estimation loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AeBranch {
    Yes,
    No,
}

/// Output of one estimation call: the estimate, the branch verdict, queries
/// consumed, and the final query count of the loop.
#[derive(Debug, Clone, Copy)]
pub struct AeOutcome {
    pub estimate: f64,
    pub branch: AeBranch,
    pub queries_used: u64,
    pub j_final: u64,
}

/// The doubling estimation loop. Doubles the query count from `j_init` up to
/// `j_hi`; each pass takes the median of `repeats` independent estimates of
/// eps/M (charging its query count per estimate) and accepts once
///
/// ```text
/// 2 sqrt(2) pi sqrt((1-delta) eps') / (J sqrt(M)) + pi^2 / J^2  <=  delta eps' / M
/// ```
///
/// holds for the scaled estimate eps'. On acceptance returns (eps', Yes);
/// on exhaustion returns (tau, No). Contract, holding with probability at
/// least 1 - 10 delta / rounds: Yes implies |eps - eps'| <= delta eps', and
/// No implies |eps - eps'| <= tau. Total queries stay below 2 * j_max.
pub fn modified_amplitude_estimation<R: Rng>(
    eps_tilde: f64,
    budget: &NoiseBudget,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<AeOutcome> {
    if !(0.0..=1.0).contains(&eps_tilde) {
        return Err(Error::ParameterOutOfRange(format!("eps_tilde {eps_tilde}")));
    }
    if budget.delta <= 0.0 {
        return Err(Error::ParameterOutOfRange(
            "estimation loop needs delta > 0".into(),
        ));
    }
    let m = budget.m as f64;
    let a = eps_tilde / m;
    let delta = budget.delta;
    let reps = budget.repeats();
    let j_hi = budget.j_hi();
    let mut queries = 0u64;
    let mut j = budget.j_init();
    let mut j_last = j;
    while j <= j_hi {
        j_last = j;
        let mut estimates: Vec<f64> = (0..reps)
            .map(|_| amplitude_estimate(a, j, rng, ledger))
            .collect();
        queries += reps * j;
        estimates.sort_by(f64::total_cmp);
        let eps_prime = estimates[estimates.len() / 2] * m;
        let jf = j as f64;
        let lhs = 2.0
            * std::f64::consts::SQRT_2
            * std::f64::consts::PI
            * ((1.0 - delta) * eps_prime).sqrt()
            / (jf * m.sqrt())
            + std::f64::consts::PI.powi(2) / (jf * jf);
        let rhs = delta * eps_prime / m;
        if lhs <= rhs {
            return Ok(AeOutcome {
                estimate: eps_prime,
                branch: AeBranch::Yes,
                queries_used: queries,
                j_final: j,
            });
        }
        j = j.saturating_mul(2);
    }
    Ok(AeOutcome {
        estimate: budget.tau,
        branch: AeBranch::No,
        queries_used: queries,
        j_final: j_last,
    })
}

/// Per-round query counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoundQueries {
    pub amplification: u64,
    pub estimation: u64,
    pub hypothesis: u64,
    pub state_prep: u64,
}

impl RoundQueries {
    pub fn total(&self) -> u64 {
        self.amplification + self.estimation + self.hypothesis + self.state_prep
    }

    fn add(&mut self, other: &RoundQueries) {
        self.amplification += other.amplification;
        self.estimation += other.estimation;
        self.hypothesis += other.hypothesis;
        self.state_prep += other.state_prep;
    }
}

/// Counts simulated oracle invocations per round. Cumulative totals are
/// monotone by construction; one ledger belongs to one run.
#[derive(Debug, Clone, Default)]
pub struct QueryLedger {
    rounds: Vec<RoundQueries>,
}

impl QueryLedger {
    pub fn new() -> Self {
        QueryLedger {
            rounds: vec![RoundQueries::default()],
        }
    }

    pub fn begin_round(&mut self) {
        self.rounds.push(RoundQueries::default());
    }

    fn current(&mut self) -> &mut RoundQueries {
        self.rounds
            .last_mut()
            .expect("ledger always holds one round")
    }

    pub fn charge_amplification(&mut self, n: u64) {
        self.current().amplification += n;
    }

    pub fn charge_estimation(&mut self, n: u64) {
        self.current().estimation += n;
    }

    pub fn charge_hypothesis(&mut self, n: u64) {
        self.current().hypothesis += n;
    }

    pub fn charge_state_prep(&mut self, n: u64) {
        self.current().state_prep += n;
    }

    pub fn current_round(&self) -> &RoundQueries {
        self.rounds.last().expect("ledger always holds one round")
    }

    pub fn rounds(&self) -> &[RoundQueries] {
        &self.rounds
    }

    pub fn totals(&self) -> RoundQueries {
        let mut t = RoundQueries::default();
        for r in &self.rounds {
            t.add(r);
        }
        t
    }

    pub fn grand_total(&self) -> u64 {
        self.totals().total()
    }
}

/// A prepared example state over a training set: sub-normalized point
/// weights plus the residual component carrying the missing mass.
#[derive(Debug, Clone)]
pub struct QuantumExampleState {
    weights: WeightVector,
    residual_norm: f64,
    round: usize,
}

impl QuantumExampleState {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn round(&self) -> usize {
        self.round
    }
}

/// Build the example state for a sub-normalized weight vector, charging the
/// amplification cost ceil(sqrt(M / max(mass, 1/2))) to the ledger. The
/// max(., 1/2) guard covers pathological early-abort states.
pub fn make_example_state(
    weights: &WeightVector,
    round: usize,
    ledger: &mut QueryLedger,
) -> Result<QuantumExampleState> {
    let mass = weights.sum();
    if mass > 1.0 + DISTRIBUTION_TOL {
        return Err(Error::NotSubnormalized(mass));
    }
    if mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let m = weights.len() as f64;
    let iterations = (m / mass.max(0.5)).sqrt().ceil() as u64;
    ledger.charge_amplification(iterations);
    Ok(QuantumExampleState {
        weights: weights.clone(),
        residual_norm: (1.0 - mass).max(0.0),
        round,
    })
}

/// One measurement of an example state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measurement {
    Point(usize),
    Residual,
}

/// Measure: point i with probability w_i, residual with the leftover mass.
pub fn measure_example<R: Rng>(state: &QuantumExampleState, rng: &mut R) -> Measurement {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in state.weights().as_slice().iter().enumerate() {
        acc += w;
        if u < acc {
            return Measurement::Point(i);
        }
    }
    Measurement::Residual
}

/// Bhattacharyya-type overlap sum_x sqrt(a_x b_x) between a sub-normalized
/// vector and the true distribution it tracks.
pub fn fidelity(subnorm: &WeightVector, truth: &WeightVector) -> Result<f64> {
    if subnorm.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: subnorm.len(),
            right: truth.len(),
        });
    }
    if (truth.sum() - 1.0).abs() > 1e-9 {
        return Err(Error::NotSubnormalized(truth.sum()));
    }
    Ok(comp_sum(
        subnorm
            .as_slice()
            .iter()
            .zip(truth.as_slice())
            .map(|(a, b)| (a * b).sqrt()),
    ))
}
