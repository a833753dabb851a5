//! Interchangeable weighted-error oracles. The boosting driver only ever
//! sees an [`AeOutcome`]; whether it came from an exact computation, a
//! synthetic noise envelope, or the simulated estimation loop is selected
//! here. All modes produce outcomes with the same contract shape: a Yes
//! verdict carries a multiplicative delta-accurate estimate, a No verdict
//! carries the floor tau.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::boostcore::{weighted_error, WeightVector};
use crate::concepts::{Hypothesis, TrainingSet};
use crate::error::{Error, Result};
use crate::qsim::{modified_amplitude_estimation, AeBranch, AeOutcome, NoiseBudget, QueryLedger};

/// Which oracle backs `estimate_error`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorOracleMode {
    /// Zero-noise: returns the weighted error itself (floored at tau).
    Exact,
    /// Uniform noise over the multiplicative contract envelope.
    Synthetic,
    /// The extreme low edge of the envelope, every round.
    AdversarialLow,
    /// The extreme high edge of the envelope, every round.
    AdversarialHigh,
    /// The simulated doubling estimation loop.
    QSim,
}

impl fmt::Display for ErrorOracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorOracleMode::Exact => "exact",
            ErrorOracleMode::Synthetic => "synthetic",
            ErrorOracleMode::AdversarialLow => "adversarial-low",
            ErrorOracleMode::AdversarialHigh => "adversarial-high",
            ErrorOracleMode::QSim => "qsim",
        };
        write!(f, "{s}")
    }
}

impl FromStr for ErrorOracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ErrorOracleMode::Exact),
            "synthetic" => Ok(ErrorOracleMode::Synthetic),
            "adversarial-low" => Ok(ErrorOracleMode::AdversarialLow),
            "adversarial-high" => Ok(ErrorOracleMode::AdversarialHigh),
            "qsim" => Ok(ErrorOracleMode::QSim),
            other => Err(Error::Parse(format!("unknown oracle mode {other}"))),
        }
    }
}

/// Direction of the adversarial envelope edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseDirection {
    Low,
    High,
}

/// Estimate the weighted error of `h` under the sub-normalized `dtilde`.
pub fn estimate_error<R: Rng>(
    mode: ErrorOracleMode,
    dtilde: &WeightVector,
    h: &Hypothesis,
    s: &TrainingSet,
    budget: &NoiseBudget,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<AeOutcome> {
    let eps_tilde = weighted_error(dtilde, h, s)?;
    match mode {
        ErrorOracleMode::Exact => Ok(if eps_tilde >= budget.tau {
            AeOutcome {
                estimate: eps_tilde,
                branch: AeBranch::Yes,
                queries_used: 0,
                j_final: 0,
            }
        } else {
            floored(budget)
        }),
        ErrorOracleMode::Synthetic => {
            if eps_tilde >= budget.yes_threshold() {
                let lo = eps_tilde / (1.0 + budget.delta);
                let hi = eps_tilde / (1.0 - budget.delta);
                let estimate = lo + (hi - lo) * rng.random::<f64>();
                Ok(AeOutcome {
                    estimate,
                    branch: AeBranch::Yes,
                    queries_used: 0,
                    j_final: 0,
                })
            } else {
                Ok(floored(budget))
            }
        }
        ErrorOracleMode::AdversarialLow => {
            adversarial_noise(dtilde, h, s, budget, NoiseDirection::Low)
        }
        ErrorOracleMode::AdversarialHigh => {
            adversarial_noise(dtilde, h, s, budget, NoiseDirection::High)
        }
        ErrorOracleMode::QSim => modified_amplitude_estimation(eps_tilde, budget, rng, ledger),
    }
}

/// The extreme estimate the contract envelope permits in the requested
/// direction: eps' = eps / (1 +- delta), so |eps - eps'| = delta eps' exactly.
pub fn adversarial_noise(
    dtilde: &WeightVector,
    h: &Hypothesis,
    s: &TrainingSet,
    budget: &NoiseBudget,
    direction: NoiseDirection,
) -> Result<AeOutcome> {
    let eps_tilde = weighted_error(dtilde, h, s)?;
    if eps_tilde < budget.yes_threshold() {
        return Ok(floored(budget));
    }
    let estimate = match direction {
        NoiseDirection::Low => eps_tilde / (1.0 + budget.delta),
        NoiseDirection::High => eps_tilde / (1.0 - budget.delta),
    };
    Ok(AeOutcome {
        estimate,
        branch: AeBranch::Yes,
        queries_used: 0,
        j_final: 0,
    })
}

fn floored(budget: &NoiseBudget) -> AeOutcome {
    AeOutcome {
        estimate: budget.tau,
        branch: AeBranch::No,
        queries_used: 0,
        j_final: 0,
    }
}
