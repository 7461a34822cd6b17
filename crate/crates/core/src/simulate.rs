//! Ground-truth generators: HMM activity traces and random probability
//! vectors for the Monte Carlo studies.
//!
//! All randomness flows through counter-based ChaCha streams derived from a
//! `(seed, stream)` pair, so simulations are reproducible and Monte Carlo
//! trials can fan out across workers without changing results.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hbg::{hbg_sample, HbgParams};
use crate::hmm::HmmModel;
use crate::majorize::ProbVector;

/// Deterministic per-stream generator for a given seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Whether the hidden state evolves daily or once per window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateBinning {
    /// The chain steps every day.
    FreeRunning,
    /// The chain steps once per window; all days of a window share a state.
    WindowConstant,
}

/// Configuration of one simulated activity trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: HmmModel,
    pub n_days: usize,
    pub seed: u64,
    pub binning: StateBinning,
}

/// Reference two-state model used by the comparative simulation study:
/// `p0 = 0.4`, `q0 = 0.6`, quiet state `(0.1, 0.3)`, active state
/// `(0.2, 0.4)`, initial distribution stationary.
pub fn study_model(delta: usize) -> HmmModel {
    let mut model = HmmModel::new(
        [0.5, 0.5],
        0.4,
        0.6,
        [
            HbgParams::new(0.1, 0.3).expect("valid emission"),
            HbgParams::new(0.2, 0.4).expect("valid emission"),
        ],
        delta,
    )
    .expect("valid model");
    model.pi = model.stationary();
    model
}

fn step_state<R: Rng>(trans: &[[f64; 2]; 2], state: u8, rng: &mut R) -> u8 {
    let u: f64 = rng.random();
    u8::from(u >= trans[state as usize][0])
}

/// Generate `(daily counts, daily true states)` from the model.
///
/// The state before the first day is drawn from the model's initial
/// distribution; identical seeds produce identical traces.
pub fn simulate_hmm(cfg: &SimConfig) -> Result<(Vec<u32>, Vec<u8>)> {
    let delta = cfg.model.delta;
    if cfg.n_days < delta {
        return Err(Error::LengthMismatch {
            left: cfg.n_days,
            right: delta,
        });
    }
    let mut rng = stream_rng(cfg.seed, 0);
    let trans = cfg.model.transition();
    let mut state = u8::from(rng.random::<f64>() >= cfg.model.pi[0]);

    let mut counts = Vec::with_capacity(cfg.n_days);
    let mut states = Vec::with_capacity(cfg.n_days);
    match cfg.binning {
        StateBinning::FreeRunning => {
            for _ in 0..cfg.n_days {
                state = step_state(&trans, state, &mut rng);
                states.push(state);
                counts.push(hbg_sample(cfg.model.emit[state as usize], &mut rng) as u32);
            }
        }
        StateBinning::WindowConstant => {
            let mut day = 0;
            while day < cfg.n_days {
                state = step_state(&trans, state, &mut rng);
                let span = delta.min(cfg.n_days - day);
                for _ in 0..span {
                    states.push(state);
                    counts.push(hbg_sample(cfg.model.emit[state as usize], &mut rng) as u32);
                }
                day += span;
            }
        }
    }
    Ok((counts, states))
}

/// Random weight model for probability-vector pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorModel {
    /// Weights uniform on `[0, 1]`.
    Uniform01,
    /// Weights `|N(0, 1)|`.
    FoldedNormal,
    /// Integer weights uniform on `{1, .., k_max}`.
    DiscreteUniform { k_max: u32 },
}

impl VectorModel {
    fn draw_weight<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            VectorModel::Uniform01 => rng.random(),
            VectorModel::FoldedNormal => folded_normal(rng),
            VectorModel::DiscreteUniform { k_max } => f64::from(rng.random_range(1..=k_max)),
        }
    }
}

fn folded_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller, folded.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    ((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()).abs()
}

/// Draw one probability vector: support size uniform on `{1, .., delta}`,
/// weights per model, normalized and zero-padded to length `delta`.
pub fn sample_vector<R: Rng>(model: VectorModel, delta: usize, rng: &mut R) -> ProbVector {
    let support = rng.random_range(1..=delta);
    let weights: Vec<f64> = (0..support).map(|_| model.draw_weight(rng)).collect();
    ProbVector::from_weights(&weights)
        .expect("positive weights")
        .zero_pad(delta)
}

/// Draw an independent pair of probability vectors.
pub fn sample_vector_pair<R: Rng>(
    model: VectorModel,
    delta: usize,
    rng: &mut R,
) -> (ProbVector, ProbVector) {
    let p = sample_vector(model, delta, rng);
    let q = sample_vector(model, delta, rng);
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hbg::hbg_pmf;

    #[test]
    fn same_seed_same_trace() {
        let cfg = SimConfig {
            model: study_model(7),
            n_days: 700,
            seed: 4242,
            binning: StateBinning::FreeRunning,
        };
        assert_eq!(simulate_hmm(&cfg).unwrap(), simulate_hmm(&cfg).unwrap());
        let other = SimConfig { seed: 4243, ..cfg.clone() };
        assert_ne!(simulate_hmm(&cfg).unwrap(), simulate_hmm(&other).unwrap());
    }

    #[test]
    fn absorbing_chain_never_activates() {
        let mut model = study_model(7);
        model.p0 = 0.0;
        model.pi = [1.0, 0.0];
        let cfg = SimConfig {
            model,
            n_days: 500,
            seed: 7,
            binning: StateBinning::FreeRunning,
        };
        let (_, states) = simulate_hmm(&cfg).unwrap();
        assert!(states.iter().all(|&s| s == 0));
    }

    #[test]
    fn stationary_fraction_matches_chain() {
        let cfg = SimConfig {
            model: study_model(7),
            n_days: 1_000_000,
            seed: 31,
            binning: StateBinning::FreeRunning,
        };
        let (_, states) = simulate_hmm(&cfg).unwrap();
        let ones = states.iter().filter(|&&s| s == 1).count() as f64;
        let fraction = ones / states.len() as f64;
        assert!((fraction - 0.4).abs() < 0.01, "fraction {fraction}");
    }

    #[test]
    fn per_state_counts_match_emission_pmf() {
        let cfg = SimConfig {
            model: study_model(7),
            n_days: 1_000_000,
            seed: 8,
            binning: StateBinning::FreeRunning,
        };
        let (counts, states) = simulate_hmm(&cfg).unwrap();
        for state in 0..2u8 {
            let in_state: Vec<u32> = counts
                .iter()
                .zip(&states)
                .filter(|(_, &s)| s == state)
                .map(|(&c, _)| c)
                .collect();
            let n = in_state.len() as f64;
            for r in 0..6u64 {
                let p = hbg_pmf(cfg.model.emit[state as usize], r);
                let observed = in_state.iter().filter(|&&c| u64::from(c) == r).count() as f64;
                let se = (n * p * (1.0 - p)).sqrt();
                assert!(
                    (observed - n * p).abs() <= 4.0 * se,
                    "state {state} r {r}: {observed} vs {}",
                    n * p
                );
            }
        }
    }

    #[test]
    fn window_constant_states_are_blockwise() {
        let cfg = SimConfig {
            model: study_model(7),
            n_days: 7 * 200,
            seed: 12,
            binning: StateBinning::WindowConstant,
        };
        let (_, states) = simulate_hmm(&cfg).unwrap();
        for block in states.chunks(7) {
            assert!(block.iter().all(|&s| s == block[0]));
        }
    }

    #[test]
    fn vector_pairs_are_simplex_points() {
        for model in [
            VectorModel::Uniform01,
            VectorModel::FoldedNormal,
            VectorModel::DiscreteUniform { k_max: 10 },
        ] {
            let mut rng = stream_rng(5, 1);
            for _ in 0..100_000 {
                let (p, q) = sample_vector_pair(model, 7, &mut rng);
                for v in [&p, &q] {
                    assert_eq!(v.len(), 7);
                    let sum: f64 = v.entries().iter().sum();
                    assert!((sum - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unit_support_is_point_mass() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..200 {
            let v = sample_vector(VectorModel::Uniform01, 1, &mut rng);
            assert_eq!(v.entries(), &[1.0]);
        }
        // All weights equal: uniform over the drawn support.
        let mut rng = stream_rng(3, 1);
        for _ in 0..200 {
            let v = sample_vector(VectorModel::DiscreteUniform { k_max: 1 }, 7, &mut rng);
            let nz = v.nz();
            for &e in v.sorted().iter().take(nz) {
                assert!((e - 1.0 / nz as f64).abs() < 1e-12);
            }
        }
    }
}
