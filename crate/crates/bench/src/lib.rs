//! Shared fixtures for the pipeline benchmarks.

use spurt_core::majorize::ProbVector;
use spurt_core::simulate::{sample_vector_pair, simulate_hmm, stream_rng, study_model};
use spurt_core::{ActivityProfile, SimConfig, StateBinning, VectorModel};

/// A reference activity trace of `n_windows` weeks.
pub fn reference_profile(n_windows: usize, seed: u64) -> ActivityProfile {
    let cfg = SimConfig {
        model: study_model(7),
        n_days: n_windows * 7,
        seed,
        binning: StateBinning::WindowConstant,
    };
    let (counts, _) = simulate_hmm(&cfg).expect("valid simulation config");
    ActivityProfile::new(counts, 7).expect("valid profile")
}

/// Random probability-vector pairs drawn from the uniform weight model.
pub fn vector_pairs(n: usize, seed: u64) -> Vec<(ProbVector, ProbVector)> {
    (0..n as u64)
        .map(|trial| {
            let mut rng = stream_rng(seed, trial);
            sample_vector_pair(VectorModel::Uniform01, 7, &mut rng)
        })
        .collect()
}
