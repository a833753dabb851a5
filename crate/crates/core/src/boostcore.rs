//! Exact multiplicative-update boosting and the shared round arithmetic:
//! weighted errors, hypothesis weights, normalizers, ensembles, and the
//! per-round audit record every driver in this crate emits.

use std::fmt;

use rand::Rng;

use crate::concepts::{
    best_stump, sample_based_stump, Hypothesis, LearnerMode, TrainingSet, WeakLearnerSpec,
};
use crate::error::{Error, Result};
use crate::numeric::comp_sum;
use crate::qsim::{make_example_state, QueryLedger};

/// Nonnegative weights over a training set. A true distribution sums to 1
/// within 1e-12; a sub-normalized vector sums to at most 1 + 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

pub const DISTRIBUTION_TOL: f64 = 1e-12;

impl WeightVector {
    pub fn uniform(m: usize) -> Self {
        WeightVector(vec![1.0 / m as f64; m])
    }

    pub fn from_vec(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::ParameterOutOfRange(
                "weights must be finite and nonnegative".into(),
            ));
        }
        Ok(WeightVector(w))
    }

    /// Validating constructor for a sub-normalized vector (sum <= 1 + 1e-12).
    pub fn subnormalized(w: Vec<f64>) -> Result<Self> {
        let v = Self::from_vec(w)?;
        if v.sum() > 1.0 + DISTRIBUTION_TOL {
            return Err(Error::NotSubnormalized(v.sum()));
        }
        Ok(v)
    }

    /// Validating constructor for a true distribution (|sum - 1| <= 1e-12).
    pub fn distribution(w: Vec<f64>) -> Result<Self> {
        let v = Self::from_vec(w)?;
        if (v.sum() - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(Error::NotSubnormalized(v.sum()));
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        comp_sum(self.0.iter().copied())
    }

    pub fn is_distribution(&self) -> bool {
        (self.sum() - 1.0).abs() <= DISTRIBUTION_TOL
    }

    pub fn is_subnormalized(&self) -> bool {
        self.sum() <= 1.0 + DISTRIBUTION_TOL
    }

    /// Scale to total mass 1.
    pub fn normalized(&self) -> Result<WeightVector> {
        let total = self.sum();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(WeightVector(self.0.iter().map(|w| w / total).collect()))
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Which estimation branch a round took. `Exact` marks a zero-noise oracle
/// round, which updates like a `Yes` round with the true weighted error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Exact,
    Yes,
    No,
}

impl Branch {
    pub fn is_yes_shaped(self) -> bool {
        matches!(self, Branch::Exact | Branch::Yes)
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Exact => write!(f, "exact"),
            Branch::Yes => write!(f, "yes"),
            Branch::No => write!(f, "no"),
        }
    }
}

/// Per-round audit trail shared by both boosting drivers.
#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub t: usize,
    pub branch: Branch,
    /// Weighted error of the round's hypothesis under the working
    /// (possibly sub-normalized) weight vector.
    pub eps_tilde: f64,
    /// The estimate the driver actually used.
    pub eps_prime: f64,
    /// Weighted error under the true distribution the working vector tracks.
    pub eps_true: f64,
    pub alpha_prime: f64,
    /// Bare normalizer 2*sqrt(eps'(1-eps')) for the branch's estimate.
    pub z: f64,
    /// Total mass of the working vector after the round's update.
    pub sum_dtilde: f64,
    /// Per-round overlap between the updated working vector and the true
    /// distribution it approximates (closed form, see `qboost`).
    pub fidelity: f64,
    /// Training error of the ensemble built so far.
    pub train_err: f64,
    /// Oracle invocations charged this round.
    pub queries: u64,
}

/// Weighted vote over hypotheses; predicts the sign of the weighted sum,
/// with sign(0) = +1 so predictions stay deterministic.
#[derive(Debug, Clone)]
pub struct Ensemble {
    n: usize,
    terms: Vec<(f64, Hypothesis)>,
}

impl Ensemble {
    pub fn new(n: usize, terms: Vec<(f64, Hypothesis)>) -> Self {
        Ensemble { n, terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, Hypothesis)] {
        &self.terms
    }

    pub fn predict(&self, x: u32) -> Result<i8> {
        if self.terms.is_empty() {
            return Err(Error::ParameterOutOfRange("empty ensemble".into()));
        }
        let margin = comp_sum(
            self.terms
                .iter()
                .map(|(a, h)| a * h.predict(x, self.n) as f64),
        );
        Ok(if margin >= 0.0 { 1 } else { -1 })
    }

    /// One line per term; alphas printed with 17 significant digits so the
    /// round trip is exact.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (alpha, h) in &self.terms {
            let line = match h {
                Hypothesis::Stump { feature, polarity } => format!(
                    "alpha={:.16e} kind=stump i={} pol={}\n",
                    alpha,
                    feature + 1,
                    if matches!(polarity, crate::concepts::Polarity::Plus) {
                        '+'
                    } else {
                        '-'
                    }
                ),
                Hypothesis::Constant(l) => format!(
                    "alpha={:.16e} kind=const i=0 pol={}\n",
                    alpha,
                    if *l > 0 { '+' } else { '-' }
                ),
            };
            out.push_str(&line);
        }
        out
    }

    pub fn from_lines(n: usize, text: &str) -> Result<Ensemble> {
        let mut terms = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut alpha = None;
            let mut kind = None;
            let mut idx = None;
            let mut pol = None;
            for tok in line.split_whitespace() {
                if let Some(v) = tok.strip_prefix("alpha=") {
                    alpha = Some(v.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
                } else if let Some(v) = tok.strip_prefix("kind=") {
                    kind = Some(v.to_string());
                } else if let Some(v) = tok.strip_prefix("i=") {
                    idx = Some(
                        v.parse::<usize>()
                            .map_err(|e| Error::Parse(e.to_string()))?,
                    );
                } else if let Some(v) = tok.strip_prefix("pol=") {
                    pol = Some(v.to_string());
                }
            }
            let alpha = alpha.ok_or(Error::Parse("term lacks alpha=".into()))?;
            let kind = kind.ok_or(Error::Parse("term lacks kind=".into()))?;
            let pol = pol.ok_or(Error::Parse("term lacks pol=".into()))?;
            let positive = match pol.as_str() {
                "+" => true,
                "-" => false,
                other => return Err(Error::Parse(format!("bad polarity {other}"))),
            };
            let h = match kind.as_str() {
                "stump" => {
                    let i = idx.ok_or(Error::Parse("stump lacks i=".into()))?;
                    if i == 0 || i > n {
                        return Err(Error::Parse(format!("feature index {i} out of range")));
                    }
                    Hypothesis::Stump {
                        feature: i - 1,
                        polarity: if positive {
                            crate::concepts::Polarity::Plus
                        } else {
                            crate::concepts::Polarity::Minus
                        },
                    }
                }
                "const" => Hypothesis::Constant(if positive { 1 } else { -1 }),
                other => return Err(Error::Parse(format!("bad kind {other}"))),
            };
            terms.push((alpha, h));
        }
        Ok(Ensemble::new(n, terms))
    }
}

/// Weighted misclassification mass of `h` on `s` under `d`, without
/// renormalizing. For a sub-normalized vector this is the raw error mass.
pub fn weighted_error(d: &WeightVector, h: &Hypothesis, s: &TrainingSet) -> Result<f64> {
    if d.len() != s.m() {
        return Err(Error::LengthMismatch {
            left: d.len(),
            right: s.m(),
        });
    }
    let n = s.n();
    Ok(comp_sum(
        s.points()
            .iter()
            .enumerate()
            .filter(|(_, &(x, y))| h.predict(x, n) != y)
            .map(|(i, _)| d[i]),
    ))
}

/// Hypothesis weight ln sqrt((1-eps)/eps). Errors at 0 and 1, where the
/// weight is unbounded; callers decide how to cap.
pub fn alpha_from_eps(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::DegenerateError(eps));
    }
    Ok(0.5 * ((1.0 - eps) / eps).ln())
}

/// Bare normalizer 2*sqrt(eps(1-eps)); branch factors are applied by callers.
pub fn z_factor(eps: f64) -> f64 {
    2.0 * (eps * (1.0 - eps)).sqrt()
}

/// One exact multiplicative update: scale misclassified points by e^alpha,
/// the rest by e^-alpha, renormalize by the empirical normalizer, and return
/// the normalizer alongside.
pub fn adaboost_update(
    d: &WeightVector,
    h: &Hypothesis,
    s: &TrainingSet,
    alpha: f64,
) -> Result<(WeightVector, f64)> {
    if d.len() != s.m() {
        return Err(Error::LengthMismatch {
            left: d.len(),
            right: s.m(),
        });
    }
    if !alpha.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("alpha {alpha}")));
    }
    let n = s.n();
    let scaled: Vec<f64> = s
        .points()
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| d[i] * (-alpha * (y as f64) * (h.predict(x, n) as f64)).exp())
        .collect();
    let z = comp_sum(scaled.iter().copied());
    assert!(z > 0.0, "normalizer vanished at finite alpha");
    let updated = scaled.into_iter().map(|w| w / z).collect();
    Ok((WeightVector(updated), z))
}

/// Misclassification rate of `e` on `points`: unweighted fraction when `d`
/// is omitted, expectation under `d` otherwise.
pub fn empirical_error(
    e: &Ensemble,
    points: &[(u32, i8)],
    d: Option<&WeightVector>,
) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if let Some(d) = d {
        if d.len() != points.len() {
            return Err(Error::LengthMismatch {
                left: d.len(),
                right: points.len(),
            });
        }
    }
    let mut miss = Vec::with_capacity(points.len());
    for (i, &(x, y)) in points.iter().enumerate() {
        if e.predict(x)? != y {
            miss.push(match d {
                Some(d) => d[i],
                None => 1.0 / points.len() as f64,
            });
        }
    }
    Ok(comp_sum(miss))
}

/// Cap applied to the hypothesis weight when a round finds a consistent
/// hypothesis (weighted error exactly 0).
pub fn consistent_alpha_cap(m: usize, rounds: usize) -> f64 {
    ((m * rounds) as f64).ln()
}

/// Stepping driver for the exact boosting loop. One `step` runs learn,
/// weighted error, hypothesis weight, and the multiplicative update.
pub struct AdaBooster<'a, R: Rng> {
    s: &'a TrainingSet,
    learner: WeakLearnerSpec,
    rounds: usize,
    t: usize,
    d: WeightVector,
    margins: Vec<f64>,
    terms: Vec<(f64, Hypothesis)>,
    records: Vec<RoundRecord>,
    done: bool,
    rng: R,
}

/// What a single boosting step produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Advanced,
    /// A consistent hypothesis ended the run early with a capped weight.
    ConsistentHypothesis,
    Finished,
}

impl<'a, R: Rng> AdaBooster<'a, R> {
    pub fn new(
        s: &'a TrainingSet,
        learner: WeakLearnerSpec,
        rounds: usize,
        rng: R,
    ) -> Result<Self> {
        if rounds == 0 {
            return Err(Error::ParameterOutOfRange(
                "rounds must be at least 1".into(),
            ));
        }
        if s.m() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        Ok(AdaBooster {
            s,
            learner,
            rounds,
            t: 0,
            d: WeightVector::uniform(s.m()),
            margins: vec![0.0; s.m()],
            terms: Vec::new(),
            records: Vec::new(),
            done: false,
            rng,
        })
    }

    pub fn weights(&self) -> &WeightVector {
        &self.d
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    fn learn(&mut self) -> Result<Hypothesis> {
        match self.learner.mode {
            LearnerMode::DistributionAware => Ok(best_stump(self.s, &self.d)?.0),
            LearnerMode::SampleBased { copies } => {
                // Sample-based learners receive exact-distribution draws:
                // a zero-residual example state built from the current weights.
                let mut scratch = QueryLedger::new();
                let state = make_example_state(&self.d, self.t + 1, &mut scratch)?;
                match sample_based_stump(self.s, &state, copies, &mut self.rng) {
                    Ok(h) => Ok(h),
                    // Retry once, then abort.
                    Err(Error::AllResidual) => {
                        sample_based_stump(self.s, &state, copies, &mut self.rng)
                            .map_err(|_| Error::LearnerFailure(self.t + 1))
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }

    fn push_record(&mut self, branch: Branch, eps: f64, alpha: f64) {
        let n = self.s.n();
        let m = self.s.m() as f64;
        let (_, h) = self
            .terms
            .last()
            .copied()
            .expect("term pushed before record");
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
            / m;
        self.records.push(RoundRecord {
            t: self.t,
            branch,
            eps_tilde: eps,
            eps_prime: eps,
            eps_true: eps,
            alpha_prime: alpha,
            z: z_factor(eps),
            sum_dtilde: 1.0,
            fidelity: 1.0,
            train_err,
            queries: 0,
        });
    }

    pub fn step(&mut self) -> Result<StepOutcome> {
        if self.done || self.t >= self.rounds {
            self.done = true;
            return Ok(StepOutcome::Finished);
        }
        self.t += 1;
        let h = self.learn()?;
        let eps = weighted_error(&self.d, &h, self.s)?;
        if eps + DISTRIBUTION_TOL >= 0.5 {
            return Err(Error::WeakLearningViolation { round: self.t, eps });
        }
        if eps == 0.0 {
            let alpha = consistent_alpha_cap(self.s.m(), self.rounds);
            self.terms.push((alpha, h));
            self.push_record(Branch::Exact, eps, alpha);
            self.done = true;
            return Ok(StepOutcome::ConsistentHypothesis);
        }
        let alpha = alpha_from_eps(eps)?;
        let (next, _z) = adaboost_update(&self.d, &h, self.s, alpha)?;
        self.terms.push((alpha, h));
        self.push_record(Branch::Exact, eps, alpha);
        self.d = next;
        Ok(StepOutcome::Advanced)
    }

    pub fn finish(self) -> (Ensemble, Vec<RoundRecord>) {
        (Ensemble::new(self.s.n(), self.terms), self.records)
    }
}

/// Run the exact boosting loop for up to `rounds` rounds.
pub fn run_adaboost<R: Rng>(
    s: &TrainingSet,
    learner: WeakLearnerSpec,
    rounds: usize,
    rng: R,
) -> Result<(Ensemble, Vec<RoundRecord>)> {
    let mut booster = AdaBooster::new(s, learner, rounds, rng)?;
    while booster.step()? == StepOutcome::Advanced {}
    Ok(booster.finish())
}
