//! Flat key=value experiment configuration, overridable from the command
//! line. The format is deliberately trivial: one `key = value` per line,
//! `#` starts a comment.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use qboost_core::concepts::{Concept, LearnerMode, Sampler, WeakLearnerSpec};
use qboost_core::estimators::ErrorOracleMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TSpec {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    Aware,
    Sampled,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub concept: String,
    pub n: usize,
    pub sampler: String,
    pub m: usize,
    pub t: TSpec,
    pub q: usize,
    pub gamma_floor: f64,
    pub oracle: ErrorOracleMode,
    pub learner: LearnerKind,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub t_multiplier: f64,
    pub verify: bool,
}

pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let spec = spec.trim();
    if spec.contains(',') {
        spec.split(',')
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| anyhow!("bad seed {s}: {e}"))
            })
            .collect()
    } else {
        let count: u64 = spec
            .parse()
            .with_context(|| format!("bad seed count {spec}"))?;
        if count == 0 {
            bail!("seed count must be at least 1");
        }
        Ok((0..count).collect())
    }
}

pub fn parse_on_off(spec: &str) -> Result<bool> {
    match spec {
        "on" => Ok(true),
        "off" => Ok(false),
        other => bail!("expected on or off, got {other}"),
    }
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut concept = None;
        let mut n = None;
        let mut sampler = "uniform".to_string();
        let mut m = None;
        let mut t = TSpec::Auto;
        let mut q = 4usize;
        let mut gamma_floor = 0.25f64;
        let mut oracle = ErrorOracleMode::QSim;
        let mut learner = LearnerKind::Aware;
        let mut seeds = vec![0u64];
        let mut out = PathBuf::from("out");
        let mut t_multiplier = 1.0f64;
        let mut verify = true;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "concept" => concept = Some(value.to_string()),
                "n" => n = Some(value.parse().with_context(|| format!("bad n {value}"))?),
                "sampler" => sampler = value.to_string(),
                "m" | "M" => m = Some(value.parse().with_context(|| format!("bad m {value}"))?),
                "t" | "T" => {
                    t = if value == "auto" {
                        TSpec::Auto
                    } else {
                        TSpec::Fixed(value.parse().with_context(|| format!("bad t {value}"))?)
                    }
                }
                "q" | "Q" => q = value.parse().with_context(|| format!("bad q {value}"))?,
                "gamma_floor" => {
                    gamma_floor = value
                        .parse()
                        .with_context(|| format!("bad gamma_floor {value}"))?
                }
                "oracle" => oracle = value.parse().map_err(|e| anyhow!("{e}"))?,
                "learner" => {
                    learner = match value {
                        "aware" => LearnerKind::Aware,
                        "sampled" => LearnerKind::Sampled,
                        other => bail!("unknown learner {other}"),
                    }
                }
                "seeds" => seeds = parse_seeds(value)?,
                "out" => out = PathBuf::from(value),
                "t_multiplier" => {
                    t_multiplier = value
                        .parse()
                        .with_context(|| format!("bad t_multiplier {value}"))?
                }
                "verify" => verify = parse_on_off(value)?,
                other => bail!("unknown config key {other}"),
            }
        }

        let cfg = ExperimentConfig {
            concept: concept.ok_or_else(|| anyhow!("config lacks concept"))?,
            n: n.ok_or_else(|| anyhow!("config lacks n"))?,
            sampler,
            m: m.ok_or_else(|| anyhow!("config lacks m"))?,
            t,
            q,
            gamma_floor,
            oracle,
            learner,
            seeds,
            out,
            t_multiplier,
            verify,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 20 {
            bail!("n must lie in 1..=20, got {}", self.n);
        }
        if self.m == 0 {
            bail!("m must be at least 1");
        }
        if self.m > 1 << self.n {
            bail!("m = {} exceeds the {}-bit domain", self.m, self.n);
        }
        if self.q == 0 {
            bail!("q must be at least 1");
        }
        if let TSpec::Fixed(0) = self.t {
            bail!("t must be at least 1");
        }
        if !(self.gamma_floor > 0.0 && self.gamma_floor < 0.5) {
            bail!("gamma_floor must lie in (0, 1/2), got {}", self.gamma_floor);
        }
        if self.t_multiplier.is_nan() || self.t_multiplier <= 0.0 {
            bail!("t_multiplier must be positive, got {}", self.t_multiplier);
        }
        // Resolve names eagerly so bad configs fail before any run starts.
        self.build_concept()?;
        self.build_sampler()?;
        Ok(())
    }

    pub fn build_concept(&self) -> Result<Concept> {
        let c = match self.concept.as_str() {
            "maj3" => Concept::majority(self.n, 3),
            "maj5" => Concept::majority(self.n, 5),
            "parity" => Concept::parity(self.n),
            "const:+" => Concept::constant(self.n, 1),
            "const:-" => Concept::constant(self.n, -1),
            other => match other.strip_prefix("dictator:") {
                Some(i) => {
                    let i: usize = i
                        .parse()
                        .with_context(|| format!("bad feature index {i}"))?;
                    if i == 0 {
                        bail!("dictator feature indices start at 1");
                    }
                    Concept::dictator(self.n, i - 1)
                }
                None => bail!("unknown concept {other}"),
            },
        };
        c.map_err(|e| anyhow!("{e}"))
    }

    pub fn build_sampler(&self) -> Result<Sampler> {
        match self.sampler.as_str() {
            "uniform" => Ok(Sampler::Uniform),
            other => bail!("unknown sampler {other}"),
        }
    }

    pub fn build_learner(&self) -> Result<WeakLearnerSpec> {
        let mode = match self.learner {
            LearnerKind::Aware => LearnerMode::DistributionAware,
            LearnerKind::Sampled => LearnerMode::SampleBased { copies: self.q },
        };
        WeakLearnerSpec::new(mode, self.gamma_floor).map_err(|e| anyhow!("{e}"))
    }

    pub fn rounds(&self) -> usize {
        match self.t {
            TSpec::Fixed(t) => t,
            TSpec::Auto => {
                qboost_core::concepts::auto_rounds(self.m, self.gamma_floor, self.t_multiplier)
            }
        }
    }

    /// Stump learners have zero advantage on parity concepts; refuse the
    /// pairing up front instead of looping to an inevitable abort.
    pub fn check_supported(&self) -> Result<()> {
        let concept = self.build_concept()?;
        if concept.is_parity() {
            bail!(
                "the stump learner has no advantage on parity concepts under any weighting; \
                 this configuration cannot be boosted"
            );
        }
        Ok(())
    }

    pub fn learner_label(&self) -> &'static str {
        match self.learner {
            LearnerKind::Aware => "aware",
            LearnerKind::Sampled => "sampled",
        }
    }
}
