//! Shared fixtures for the benchmark targets.

use qboost_core::concepts::{Concept, Sampler, TrainingSet};

/// Full-domain training set for the 3-bit majority concept padded to n bits.
pub fn maj3_over(n: usize) -> TrainingSet {
    let c = Concept::majority(n, 3).expect("valid width");
    let points = (0..1u32 << n).map(|x| (x, c.label(x))).collect();
    TrainingSet::new(n, points, Sampler::Uniform).expect("nonempty")
}
