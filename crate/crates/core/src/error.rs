//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("length mismatch: {left} weights vs {right} points")]
    LengthMismatch { left: usize, right: usize },

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("degenerate weighted error {0}: hypothesis weight is unbounded")]
    DegenerateError(f64),

    #[error("weight vector is not sub-normalized: sum = {0}")]
    NotSubnormalized(f64),

    #[error("weight vector carries no mass")]
    ZeroMass,

    #[error("weak-learning violation at round {round}: weighted error {eps} has no advantage over guessing")]
    WeakLearningViolation { round: usize, eps: f64 },

    #[error("every measurement fell in the residual component; no usable samples")]
    AllResidual,

    #[error("learner failed twice in a row at round {0}")]
    LearnerFailure(usize),

    #[error("state amplification failed twice in a row at round {0}")]
    AmplificationFailure(usize),

    #[error("error estimate {0} lies outside (0, 1); no finite hypothesis weight exists")]
    EstimateOutOfRange(f64),

    #[error("domain of {0} points is too large for exhaustive shattering search")]
    DomainTooLarge(usize),

    #[error("sampler support exhausted after {attempts} draws while collecting {requested} distinct points")]
    SamplerExhausted { attempts: usize, requested: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
