//! Boosting over Boolean concept classes, with interchangeable weighted-error
//! oracles: exact, synthetic noise envelopes, and an exact simulation of the
//! amplitude-estimation subroutine a quantum learner would use.
//!
//! The crate is organised around the boosting round. [`boostcore`] holds the
//! textbook engine (exact errors, exact multiplicative update). [`qboost`]
//! holds the robust two-branch variant that tolerates multiplicatively noisy
//! error estimates and tracks a sub-normalized weight vector alongside the
//! true distribution it approximates. [`qsim`] supplies the estimation
//! machinery (phase-estimation outcome statistics, the doubling estimation
//! loop, query accounting), [`estimators`] the pluggable oracle front end,
//! and [`verify`] turns the quantitative guarantees of the robust update into
//! machine-checkable reports over recorded runs.

pub mod boostcore;
pub mod concepts;
pub mod error;
pub mod estimators;
pub mod numeric;
pub mod qboost;
pub mod qsim;
pub mod verify;

pub use boostcore::{Branch, Ensemble, RoundRecord, WeightVector};
pub use concepts::{
    Concept, ConceptClass, Hypothesis, LearnerMode, Sampler, TrainingSet, WeakLearnerSpec,
};
pub use error::{Error, Result};
pub use estimators::ErrorOracleMode;
pub use qboost::{QBoostOutcome, Termination};
pub use qsim::{AeBranch, AeOutcome, NoiseBudget, QuantumExampleState, QueryLedger};
pub use verify::{ClaimId, ClaimReport};

/// Deterministic RNG used throughout the crate for reproducible runs.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Create the crate's deterministic RNG from a seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
