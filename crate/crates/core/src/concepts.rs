//! Synthetic concept classes over {0,1}^n, training-set generation, the stump
//! weak learner, an exhaustive shattering search, and the sample-size
//! calculator for the generalization regime.
//!
//! Inputs are n-bit strings packed into a `u32`, with character index 1 of
//! the serialized bitstring mapping to the leftmost (most significant) bit.
//! Labels are always in {-1, +1}.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;

use crate::boostcore::{self, WeightVector};
use crate::error::{Error, Result};
use crate::qsim::{self, Measurement, QuantumExampleState};

/// Label alias; values are -1 or +1.
pub type Label = i8;

/// Extract feature `feature` (0-based, leftmost character first) of `x`.
#[inline]
pub fn feature_bit(x: u32, n: usize, feature: usize) -> u32 {
    debug_assert!(feature < n);
    (x >> (n - 1 - feature)) & 1
}

/// A total Boolean function on {0,1}^n with labels in {-1,+1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    n: usize,
    rule: ConceptRule,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum ConceptRule {
    /// Explicit truth table indexed by the packed input; only for n <= 20.
    Table(Vec<Label>),
    /// Majority vote over the first `width` features (width odd).
    Majority {
        width: usize,
    },
    /// Copies a single feature.
    Dictator {
        feature: usize,
    },
    Constant(Label),
    /// Parity of all n features. Stump learners have zero advantage here;
    /// the experiment harness refuses the pairing.
    Parity,
}

impl Concept {
    pub fn from_table(n: usize, table: Vec<Label>) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::ParameterOutOfRange(format!(
                "table concept width {n}"
            )));
        }
        if table.len() != 1 << n {
            return Err(Error::ParameterOutOfRange(format!(
                "table length {} for width {n}",
                table.len()
            )));
        }
        if table.iter().any(|&l| l != 1 && l != -1) {
            return Err(Error::ParameterOutOfRange(
                "table labels must be +1/-1".into(),
            ));
        }
        Ok(Self {
            n,
            rule: ConceptRule::Table(table),
        })
    }

    pub fn majority(n: usize, width: usize) -> Result<Self> {
        if width == 0 || width.is_multiple_of(2) || width > n {
            return Err(Error::ParameterOutOfRange(format!(
                "majority width {width} over {n} bits"
            )));
        }
        Ok(Self {
            n,
            rule: ConceptRule::Majority { width },
        })
    }

    pub fn dictator(n: usize, feature: usize) -> Result<Self> {
        if feature >= n {
            return Err(Error::ParameterOutOfRange(format!(
                "dictator feature {feature} of {n}"
            )));
        }
        Ok(Self {
            n,
            rule: ConceptRule::Dictator { feature },
        })
    }

    pub fn constant(n: usize, label: Label) -> Result<Self> {
        if label != 1 && label != -1 {
            return Err(Error::ParameterOutOfRange(
                "constant label must be +1/-1".into(),
            ));
        }
        Ok(Self {
            n,
            rule: ConceptRule::Constant(label),
        })
    }

    pub fn parity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ParameterOutOfRange("parity over zero bits".into()));
        }
        Ok(Self {
            n,
            rule: ConceptRule::Parity,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_parity(&self) -> bool {
        matches!(self.rule, ConceptRule::Parity)
    }

    /// Evaluate the concept on any n-bit input. Total and deterministic.
    pub fn label(&self, x: u32) -> Label {
        debug_assert!(self.n == 32 || x < (1u32 << self.n));
        match &self.rule {
            ConceptRule::Table(t) => t[x as usize],
            ConceptRule::Majority { width } => {
                let ones: u32 = (0..*width).map(|f| feature_bit(x, self.n, f)).sum();
                if ones as usize * 2 > *width {
                    1
                } else {
                    -1
                }
            }
            ConceptRule::Dictator { feature } => {
                if feature_bit(x, self.n, *feature) == 1 {
                    1
                } else {
                    -1
                }
            }
            ConceptRule::Constant(l) => *l,
            ConceptRule::Parity => {
                let ones: u32 = (0..self.n).map(|f| feature_bit(x, self.n, f)).sum();
                if ones % 2 == 1 {
                    1
                } else {
                    -1
                }
            }
        }
    }

    /// Serialize as a full truth table in the line-oriented text format.
    pub fn to_table_text(&self) -> String {
        let m = 1usize << self.n;
        let mut out = format!("n={} M={}\n", self.n, m);
        for x in 0..m as u32 {
            out.push_str(&format!(
                "{:0width$b} {}\n",
                x,
                fmt_label(self.label(x)),
                width = self.n
            ));
        }
        out
    }

    /// Parse a concept from its truth-table text form.
    pub fn from_table_text(text: &str) -> Result<Self> {
        let (n, points) = parse_point_lines(text)?;
        let m = 1usize << n;
        if points.len() != m {
            return Err(Error::Parse(format!(
                "truth table needs {m} rows for n={n}, found {}",
                points.len()
            )));
        }
        let mut table = vec![0i8; m];
        for (x, y) in points {
            table[x as usize] = y;
        }
        Concept::from_table(n, table)
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            ConceptRule::Table(_) => write!(f, "table[n={}]", self.n),
            ConceptRule::Majority { width } => write!(f, "maj{width}[n={}]", self.n),
            ConceptRule::Dictator { feature } => {
                write!(f, "dictator:{}[n={}]", feature + 1, self.n)
            }
            ConceptRule::Constant(l) => write!(f, "const:{}", if *l > 0 { "+" } else { "-" }),
            ConceptRule::Parity => write!(f, "parity[n={}]", self.n),
        }
    }
}

/// A finite, enumerable set of concepts sharing one input width.
#[derive(Debug, Clone)]
pub struct ConceptClass {
    n: usize,
    members: Vec<Concept>,
}

impl ConceptClass {
    pub fn new(n: usize, members: Vec<Concept>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::ParameterOutOfRange("empty concept class".into()));
        }
        if members.iter().any(|c| c.n() != n) {
            return Err(Error::ParameterOutOfRange(
                "class members disagree on width".into(),
            ));
        }
        Ok(Self { n, members })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[Concept] {
        &self.members
    }

    pub fn to_text(&self) -> String {
        self.members
            .iter()
            .map(Concept::to_table_text)
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut members = Vec::new();
        for block in text.split("\n\n").filter(|b| !b.trim().is_empty()) {
            members.push(Concept::from_table_text(block)?);
        }
        let n = members
            .first()
            .ok_or(Error::Parse("no concepts in text".into()))?
            .n();
        ConceptClass::new(n, members)
    }
}

/// Sampling distribution over {0,1}^n used to draw training points.
#[derive(Debug, Clone)]
pub enum Sampler {
    Uniform,
    /// Explicit weights over the packed domain, length 2^n.
    Weighted(Vec<f64>),
}

impl Sampler {
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> u32 {
        match self {
            Sampler::Uniform => rng.random_range(0..(1u64 << n)) as u32,
            Sampler::Weighted(w) => {
                let total: f64 = w.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (x, p) in w.iter().enumerate() {
                    u -= p;
                    if u <= 0.0 {
                        return x as u32;
                    }
                }
                (w.len() - 1) as u32
            }
        }
    }

    pub fn support_size(&self, n: usize) -> usize {
        match self {
            Sampler::Uniform => 1usize << n,
            Sampler::Weighted(w) => w.iter().filter(|&&p| p > 0.0).count(),
        }
    }
}

/// Labeled training points plus the sampler that produced them, kept for
/// held-out evaluation later.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    n: usize,
    points: Vec<(u32, Label)>,
    sampler: Sampler,
}

impl TrainingSet {
    pub fn new(n: usize, points: Vec<(u32, Label)>, sampler: Sampler) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        Ok(Self { n, points, sampler })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[(u32, Label)] {
        &self.points
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n={} M={}\n", self.n, self.m());
        for &(x, y) in &self.points {
            out.push_str(&format!(
                "{:0width$b} {}\n",
                x,
                fmt_label(y),
                width = self.n
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (n, points) = parse_point_lines(text)?;
        TrainingSet::new(n, points, Sampler::Uniform)
    }
}

fn fmt_label(l: Label) -> &'static str {
    if l > 0 {
        "+1"
    } else {
        "-1"
    }
}

fn parse_point_lines(text: &str) -> Result<(usize, Vec<(u32, Label)>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or(Error::Parse("missing header line".into()))?;
    let mut n = None;
    let mut m = None;
    for tok in header.split_whitespace() {
        if let Some(v) = tok.strip_prefix("n=") {
            n = Some(
                v.parse::<usize>()
                    .map_err(|e| Error::Parse(e.to_string()))?,
            );
        } else if let Some(v) = tok.strip_prefix("M=") {
            m = Some(
                v.parse::<usize>()
                    .map_err(|e| Error::Parse(e.to_string()))?,
            );
        }
    }
    let n = n.ok_or(Error::Parse("header lacks n=".into()))?;
    let m = m.ok_or(Error::Parse("header lacks M=".into()))?;
    if n == 0 || n > 32 {
        return Err(Error::Parse(format!("unsupported width n={n}")));
    }
    let mut points = Vec::with_capacity(m);
    for line in lines {
        let mut parts = line.split_whitespace();
        let bits = parts
            .next()
            .ok_or(Error::Parse("missing bitstring".into()))?;
        let lab = parts.next().ok_or(Error::Parse("missing label".into()))?;
        if bits.len() != n {
            return Err(Error::Parse(format!("bitstring {bits} has wrong width")));
        }
        let x = u32::from_str_radix(bits, 2).map_err(|e| Error::Parse(e.to_string()))?;
        let y = match lab {
            "+1" | "1" => 1,
            "-1" => -1,
            other => return Err(Error::Parse(format!("bad label {other}"))),
        };
        points.push((x, y));
    }
    if points.len() != m {
        return Err(Error::Parse(format!(
            "expected {m} points, found {}",
            points.len()
        )));
    }
    Ok((n, points))
}

/// Stump polarity: `Plus` predicts +1 when the feature bit is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Plus,
    Minus,
}

impl Polarity {
    fn sign(self) -> Label {
        match self {
            Polarity::Plus => 1,
            Polarity::Minus => -1,
        }
    }
}

/// A weak hypothesis: a single-feature decision stump or a constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Stump { feature: usize, polarity: Polarity },
    Constant(Label),
}

impl Hypothesis {
    /// Deterministic, total evaluation on any n-bit input.
    #[inline]
    pub fn predict(&self, x: u32, n: usize) -> Label {
        match self {
            Hypothesis::Stump { feature, polarity } => {
                if feature_bit(x, n, *feature) == 1 {
                    polarity.sign()
                } else {
                    -polarity.sign()
                }
            }
            Hypothesis::Constant(l) => *l,
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::Stump { feature, polarity } => {
                let p = if matches!(polarity, Polarity::Plus) {
                    '+'
                } else {
                    '-'
                };
                write!(f, "stump(i={},{p})", feature + 1)
            }
            Hypothesis::Constant(l) => write!(f, "const({})", if *l > 0 { "+1" } else { "-1" }),
        }
    }
}

/// Candidate hypotheses in tie-break order: lowest feature index first,
/// positive polarity before negative, stumps before constants.
pub fn candidate_hypotheses(n: usize) -> Vec<Hypothesis> {
    let mut out = Vec::with_capacity(2 * n + 2);
    for feature in 0..n {
        out.push(Hypothesis::Stump {
            feature,
            polarity: Polarity::Plus,
        });
        out.push(Hypothesis::Stump {
            feature,
            polarity: Polarity::Minus,
        });
    }
    out.push(Hypothesis::Constant(1));
    out.push(Hypothesis::Constant(-1));
    out
}

/// How the weak learner consumes the training distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerMode {
    /// Reads the weight vector directly.
    DistributionAware,
    /// Consumes `copies` measurement samples per round.
    SampleBased { copies: usize },
}

/// Weak-learner configuration: consumption mode plus the advantage the
/// caller demands of it.
#[derive(Debug, Clone, Copy)]
pub struct WeakLearnerSpec {
    pub mode: LearnerMode,
    pub gamma_floor: f64,
}

impl WeakLearnerSpec {
    pub fn new(mode: LearnerMode, gamma_floor: f64) -> Result<Self> {
        if !(gamma_floor > 0.0 && gamma_floor < 0.5) {
            return Err(Error::ParameterOutOfRange(format!(
                "gamma_floor {gamma_floor}"
            )));
        }
        Ok(Self { mode, gamma_floor })
    }
}

/// Draw points from `sampler` until `m` distinct ones are collected, label
/// them with `concept`, and return them in sorted order.
pub fn generate_training_set<R: Rng>(
    concept: &Concept,
    sampler: &Sampler,
    m: usize,
    rng: &mut R,
) -> Result<TrainingSet> {
    if m == 0 {
        return Err(Error::ParameterOutOfRange("M must be at least 1".into()));
    }
    let n = concept.n();
    if m > sampler.support_size(n) {
        return Err(Error::SamplerExhausted {
            attempts: 0,
            requested: m,
        });
    }
    let mut seen = BTreeSet::new();
    let cap = 1000 + 512 * m;
    let mut attempts = 0;
    while seen.len() < m {
        if attempts >= cap {
            return Err(Error::SamplerExhausted {
                attempts,
                requested: m,
            });
        }
        seen.insert(sampler.sample(n, rng));
        attempts += 1;
    }
    let points = seen.into_iter().map(|x| (x, concept.label(x))).collect();
    TrainingSet::new(n, points, sampler.clone())
}

/// Exact weak learner: the stump or constant minimizing the weighted error
/// over all 2n+2 candidates. Weights are renormalized internally; ties break
/// toward the earliest candidate in [`candidate_hypotheses`] order.
pub fn best_stump(s: &TrainingSet, d: &WeightVector) -> Result<(Hypothesis, f64)> {
    if s.m() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if d.len() != s.m() {
        return Err(Error::LengthMismatch {
            left: d.len(),
            right: s.m(),
        });
    }
    let total = d.sum();
    if total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let mut best = None;
    let mut best_err = f64::INFINITY;
    for h in candidate_hypotheses(s.n()) {
        let raw = boostcore::weighted_error(d, &h, s)?;
        let err = raw / total;
        if err < best_err {
            best_err = err;
            best = Some(h);
        }
    }
    Ok((best.expect("candidate list is nonempty"), best_err))
}

/// Sample-consuming weak learner. Draws up to `10 * copies` measurements
/// from `state`, discarding residual outcomes, until `copies` training points
/// are retained, then runs [`best_stump`] on their empirical distribution.
pub fn sample_based_stump<R: Rng>(
    s: &TrainingSet,
    state: &QuantumExampleState,
    copies: usize,
    rng: &mut R,
) -> Result<Hypothesis> {
    if copies == 0 {
        return Err(Error::ParameterOutOfRange(
            "copies must be at least 1".into(),
        ));
    }
    if state.len() != s.m() {
        return Err(Error::LengthMismatch {
            left: state.len(),
            right: s.m(),
        });
    }
    let mut counts = vec![0u64; s.m()];
    let mut retained = 0usize;
    for _ in 0..(10 * copies) {
        if retained == copies {
            break;
        }
        match qsim::measure_example(state, rng) {
            Measurement::Point(i) => {
                counts[i] += 1;
                retained += 1;
            }
            Measurement::Residual => {}
        }
    }
    if retained == 0 {
        return Err(Error::AllResidual);
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / retained as f64).collect();
    let d = WeightVector::from_vec(empirical)?;
    Ok(best_stump(s, &d)?.0)
}

/// Largest k such that some k-subset of `domain` is shattered by `class`.
///
/// Exhaustive search, feasible because shatterable sets are downward closed:
/// level k+1 candidates extend level-k shattered sets.
pub fn vc_dimension_bruteforce(class: &ConceptClass, domain: &[u32]) -> Result<usize> {
    if domain.len() > 24 {
        return Err(Error::DomainTooLarge(domain.len()));
    }
    // Distinct label patterns over the domain, one bit per domain point.
    let patterns: BTreeSet<u32> = class
        .members()
        .iter()
        .map(|c| {
            domain
                .iter()
                .enumerate()
                .fold(0u32, |acc, (i, &x)| acc | (((c.label(x) > 0) as u32) << i))
        })
        .collect();
    let patterns: Vec<u32> = patterns.into_iter().collect();

    let shattered = |subset: u32| -> bool {
        let k = subset.count_ones();
        let mut seen = BTreeSet::new();
        for &p in &patterns {
            seen.insert(pext(p, subset));
            if seen.len() == (1usize << k) {
                return true;
            }
        }
        false
    };

    let mut level: Vec<u32> = vec![0];
    let mut dim = 0;
    loop {
        let mut next = Vec::new();
        for &subset in &level {
            let start = 32 - subset.leading_zeros(); // extend past the highest set bit
            for i in start..domain.len() as u32 {
                let cand = subset | (1 << i);
                if shattered(cand) {
                    next.push(cand);
                }
            }
        }
        if next.is_empty() {
            return Ok(dim);
        }
        dim += 1;
        level = next;
    }
}

/// Extract the bits of `v` selected by `mask`, packed low.
fn pext(v: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut bit = 0;
    let mut m = mask;
    while m != 0 {
        let i = m.trailing_zeros();
        out |= ((v >> i) & 1) << bit;
        bit += 1;
        m &= m - 1;
    }
    out
}

/// Training-set size for the target generalization error: the VC-based
/// formula ceil((vc/g^2) * ln(vc/g^2) / eta^2), clamped to at least 1.
pub fn sample_size(vc: usize, gamma: f64, eta: f64) -> Result<u64> {
    if vc < 1 {
        return Err(Error::ParameterOutOfRange(format!("vc {vc}")));
    }
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::ParameterOutOfRange(format!("gamma {gamma}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::ParameterOutOfRange(format!("eta {eta}")));
    }
    let base = vc as f64 / (gamma * gamma);
    let m = (base * base.ln() / (eta * eta)).ceil();
    Ok((m.max(1.0)) as u64)
}

/// Default round count for a training set of size m and advantage floor
/// gamma, optionally scaled.
pub fn auto_rounds(m: usize, gamma_floor: f64, multiplier: f64) -> usize {
    let t = (multiplier * (m as f64).ln() / (gamma_floor * gamma_floor)).ceil();
    (t.max(1.0)) as usize
}
