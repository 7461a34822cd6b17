//! Two-state HMM engine: scaled forward–backward, Baum–Welch with four
//! pluggable emission updates, and Viterbi decoding.
//!
//! The chain convention matches the update equations implemented in
//! [`baum_welch`]: the hidden state `S_0` is drawn from the initial
//! distribution without emitting, and each subsequent state `S_t` emits
//! observation `t`. Posteriors therefore carry one more state step than
//! there are observations, and the initial-probability update reads off the
//! posterior of `S_0`.
//!
//! Forward recursions are scaled per step (normalization constants
//! accumulated in log-space) so sequences of 10^4+ observations do not
//! underflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hbg::{self, HbgParams};
use crate::profile::{ActivityProfile, WindowMetrics};

/// Lower/upper clamp applied to every probability parameter after an M-step.
const PARAM_CLAMP: (f64, f64) = (1e-6, 1.0 - 1e-6);

/// Two-state HMM with hurdle-based geometric emissions.
///
/// The transition matrix is `[[1-p0, p0], [q0, 1-q0]]`; `delta` is the
/// window length used by the window-mode likelihoods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    /// Initial state probabilities, summing to one.
    pub pi: [f64; 2],
    /// Probability of a 0 -> 1 transition.
    pub p0: f64,
    /// Probability of a 1 -> 0 transition.
    pub q0: f64,
    /// Emission parameters of states 0 and 1.
    pub emit: [HbgParams; 2],
    /// Window length for the window-mode observation sequences.
    pub delta: usize,
}

impl HmmModel {
    pub fn new(pi: [f64; 2], p0: f64, q0: f64, emit: [HbgParams; 2], delta: usize) -> Result<Self> {
        if (pi[0] + pi[1] - 1.0).abs() > 1e-12 || pi[0] < 0.0 || pi[1] < 0.0 {
            return Err(Error::InvalidParameter {
                name: "pi",
                value: pi[0] + pi[1],
            });
        }
        for (name, value) in [("p0", p0), ("q0", q0)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if delta < 2 {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta as f64,
            });
        }
        Ok(Self {
            pi,
            p0,
            q0,
            emit,
            delta,
        })
    }

    /// Row-major transition matrix.
    pub fn transition(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.p0, self.p0], [self.q0, 1.0 - self.q0]]
    }

    /// Stationary distribution of the transition matrix (falls back to the
    /// initial distribution when the chain never moves).
    pub fn stationary(&self) -> [f64; 2] {
        let total = self.p0 + self.q0;
        if total == 0.0 {
            self.pi
        } else {
            [self.q0 / total, self.p0 / total]
        }
    }

    /// Relabel states so that state 1 has the larger mean daily count; the
    /// tactic rules read a decoded 1 as the active state.
    pub fn canonicalized(mut self) -> Self {
        if self.emit[0].mean() > self.emit[1].mean() {
            self.emit.swap(0, 1);
            self.pi.swap(0, 1);
            std::mem::swap(&mut self.p0, &mut self.q0);
        }
        self
    }
}

/// Which observation sequence drives inference, and with it the matching
/// likelihood and M-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationMode {
    /// Daily counts `{M_i}`.
    DailyCounts,
    /// Active days per window `{X_n}` (binomial likelihood).
    ActiveDays,
    /// Window totals `{Y_n}` (asymptotic "Solution 1" M-step).
    TotalAttacks,
    /// Window pairs `{(X_n, Y_n)}`.
    Joint,
}

impl ObservationMode {
    pub fn is_windowed(self) -> bool {
        !matches!(self, ObservationMode::DailyCounts)
    }
}

/// E-step output: per-step state posteriors, pair posteriors and the scaled
/// log-likelihood.
#[derive(Debug, Clone)]
pub struct Posteriors {
    /// `gamma[t][j] = P(S_t = j | O)` for `t = 0..=n`; index 0 is the
    /// pre-observation state.
    pub gamma: Vec<[f64; 2]>,
    /// `zeta[t][i][j] = P(S_t = i, S_{t+1} = j | O)` for `t = 0..n`.
    pub zeta: Vec<[[f64; 2]; 2]>,
    /// Log-likelihood of the observation sequence.
    pub loglik: f64,
}

// ---------------------------------------------------------------------------
// Observation sequences
// ---------------------------------------------------------------------------

enum Obs {
    Daily(Vec<u32>),
    Windows(Vec<(u32, u64)>),
}

impl Obs {
    fn build(profile: &ActivityProfile, mode: ObservationMode) -> Self {
        match mode {
            ObservationMode::DailyCounts => Obs::Daily(profile.counts().to_vec()),
            _ => Obs::Windows(
                profile
                    .all_windows()
                    .iter()
                    .map(|w| (w.x, w.y))
                    .collect(),
            ),
        }
    }

    fn len(&self) -> usize {
        match self {
            Obs::Daily(v) => v.len(),
            Obs::Windows(v) => v.len(),
        }
    }
}

/// Log-emission table `lnb[t][j]` for `t = 0..n` (observation index).
fn ln_emission_table(model: &HmmModel, mode: ObservationMode, obs: &Obs) -> Vec<[f64; 2]> {
    let eval = |state: usize, t: usize| -> f64 {
        let params = model.emit[state];
        match (obs, mode) {
            (Obs::Daily(v), _) => hbg::hbg_ln_pmf(params, u64::from(v[t])),
            (Obs::Windows(v), ObservationMode::ActiveDays) => {
                hbg::x_ln_pmf(params, model.delta, v[t].0)
            }
            (Obs::Windows(v), ObservationMode::TotalAttacks) => {
                hbg::y_ln_pmf(params, model.delta, v[t].1)
            }
            (Obs::Windows(v), ObservationMode::Joint) => {
                hbg::joint_xy_ln_pmf(params, model.delta, v[t].0, v[t].1)
                    .expect("window metrics satisfy x <= delta, x <= y")
            }
            (Obs::Windows(_), ObservationMode::DailyCounts) => unreachable!(),
        }
    };
    (0..obs.len()).map(|t| [eval(0, t), eval(1, t)]).collect()
}

// ---------------------------------------------------------------------------
// Forward-backward
// ---------------------------------------------------------------------------

struct ForwardPass {
    /// Scaled forward variables, `alpha[t]` for `t = 0..=n`.
    alpha: Vec<[f64; 2]>,
    /// Per-step scale factors, `scale[t]` for `t = 1..=n` at index `t - 1`.
    scale: Vec<f64>,
    /// Emission probabilities shifted by the per-step max log-emission.
    shifted_emit: Vec<[f64; 2]>,
    loglik: f64,
}

fn forward_pass(model: &HmmModel, lnb: &[[f64; 2]]) -> Result<ForwardPass> {
    let n = lnb.len();
    let trans = model.transition();
    let mut alpha = Vec::with_capacity(n + 1);
    let mut scale = Vec::with_capacity(n);
    let mut shifted_emit = Vec::with_capacity(n);
    let mut loglik = 0.0;

    alpha.push(model.pi);
    for t in 0..n {
        let shift = lnb[t][0].max(lnb[t][1]);
        if shift == f64::NEG_INFINITY {
            return Err(Error::ImpossibleObservation { step: t + 1 });
        }
        let b = [(lnb[t][0] - shift).exp(), (lnb[t][1] - shift).exp()];
        shifted_emit.push(b);
        let prev = alpha[t];
        let mut cur = [0.0; 2];
        for (j, c) in cur.iter_mut().enumerate() {
            *c = (prev[0] * trans[0][j] + prev[1] * trans[1][j]) * b[j];
        }
        let norm = cur[0] + cur[1];
        if norm.is_nan() || norm <= 0.0 || norm.is_infinite() {
            return Err(Error::ImpossibleObservation { step: t + 1 });
        }
        cur[0] /= norm;
        cur[1] /= norm;
        alpha.push(cur);
        scale.push(norm);
        loglik += norm.ln() + shift;
    }
    Ok(ForwardPass {
        alpha,
        scale,
        shifted_emit,
        loglik,
    })
}

fn forward_backward_from_table(model: &HmmModel, lnb: &[[f64; 2]]) -> Result<Posteriors> {
    let n = lnb.len();
    let trans = model.transition();
    let fwd = forward_pass(model, lnb)?;

    // Scaled backward pass.
    let mut beta = vec![[1.0; 2]; n + 1];
    for t in (0..n).rev() {
        let b = fwd.shifted_emit[t];
        let next = beta[t + 1];
        let c = fwd.scale[t];
        for (i, out) in beta[t].iter_mut().enumerate() {
            *out = (trans[i][0] * b[0] * next[0] + trans[i][1] * b[1] * next[1]) / c;
        }
    }

    let gamma: Vec<[f64; 2]> = (0..=n)
        .map(|t| [fwd.alpha[t][0] * beta[t][0], fwd.alpha[t][1] * beta[t][1]])
        .collect();
    let zeta: Vec<[[f64; 2]; 2]> = (0..n)
        .map(|t| {
            let b = fwd.shifted_emit[t];
            let c = fwd.scale[t];
            let mut z = [[0.0; 2]; 2];
            for (i, row) in z.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = fwd.alpha[t][i] * trans[i][j] * b[j] * beta[t + 1][j] / c;
                }
            }
            z
        })
        .collect();

    Ok(Posteriors {
        gamma,
        zeta,
        loglik: fwd.loglik,
    })
}

/// Exact posteriors of the hidden states given the observation sequence.
pub fn forward_backward(
    model: &HmmModel,
    profile: &ActivityProfile,
    mode: ObservationMode,
) -> Result<Posteriors> {
    let obs = Obs::build(profile, mode);
    if obs.len() == 0 {
        return Err(Error::EmptyObservations);
    }
    let lnb = ln_emission_table(model, mode, &obs);
    forward_backward_from_table(model, &lnb)
}

// ---------------------------------------------------------------------------
// Viterbi
// ---------------------------------------------------------------------------

/// Most probable state path given the observations, one state per
/// observation step. Ties break toward state 0.
pub fn viterbi(
    model: &HmmModel,
    profile: &ActivityProfile,
    mode: ObservationMode,
) -> Result<Vec<u8>> {
    let obs = Obs::build(profile, mode);
    if obs.len() == 0 {
        return Err(Error::EmptyObservations);
    }
    let lnb = ln_emission_table(model, mode, &obs);
    let n = lnb.len();
    let ln_trans = {
        let t = model.transition();
        [[t[0][0].ln(), t[0][1].ln()], [t[1][0].ln(), t[1][1].ln()]]
    };

    let mut score = [model.pi[0].ln(), model.pi[1].ln()];
    let mut back = vec![[0u8; 2]; n];
    for t in 0..n {
        let mut next = [f64::NEG_INFINITY; 2];
        for j in 0..2 {
            // Iterating i upward with a strict improvement keeps ties on 0.
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0u8;
            for i in 0..2 {
                let cand = score[i] + ln_trans[i][j];
                if cand > best {
                    best = cand;
                    arg = i as u8;
                }
            }
            next[j] = best + lnb[t][j];
            back[t][j] = arg;
        }
        if next[0] == f64::NEG_INFINITY && next[1] == f64::NEG_INFINITY {
            return Err(Error::ImpossibleObservation { step: t + 1 });
        }
        score = next;
    }

    let mut state = u8::from(score[1] > score[0]);
    let mut path = vec![0u8; n];
    for t in (0..n).rev() {
        path[t] = state;
        state = back[t][state as usize];
    }
    Ok(path)
}

// ---------------------------------------------------------------------------
// Baum-Welch
// ---------------------------------------------------------------------------

/// Stopping rule for [`baum_welch`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Convergence threshold on the absolute log-likelihood change.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-6,
        }
    }
}

/// Result of a Baum–Welch fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: HmmModel,
    /// Log-likelihood after each E-step.
    pub loglik_trace: Vec<f64>,
    /// True when the tolerance was reached before `max_iters`.
    pub converged: bool,
    pub warnings: Vec<String>,
}

fn clamp_prob(x: f64) -> f64 {
    x.clamp(PARAM_CLAMP.0, PARAM_CLAMP.1)
}

/// Non-iterative continuation estimate from the daily series,
/// `Σ M(M-1) / Σ M(M+1)`; used by the active-days mode for both states.
fn daily_mu_estimate(counts: &[u32]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &c in counts {
        let m = f64::from(c);
        num += m * (m - 1.0);
        den += m * (m + 1.0);
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

struct EmissionStats {
    /// Σ_t gamma_t(j) over observation steps.
    weight: [f64; 2],
    /// Σ_t 1(M_t > 0) gamma_t(j), daily mode.
    active: [f64; 2],
    /// Σ_t (M_t - 1) 1(M_t > 0) gamma_t(j), daily mode.
    excess: [f64; 2],
    /// Σ_t M_t 1(M_t > 0) gamma_t(j), daily mode.
    mass: [f64; 2],
    /// Σ_n X_n gamma_n(j), window modes.
    sx: [f64; 2],
    /// Σ_n Y_n gamma_n(j), window modes.
    sy: [f64; 2],
}

fn emission_stats(obs: &Obs, post: &Posteriors) -> EmissionStats {
    let mut s = EmissionStats {
        weight: [0.0; 2],
        active: [0.0; 2],
        excess: [0.0; 2],
        mass: [0.0; 2],
        sx: [0.0; 2],
        sy: [0.0; 2],
    };
    for t in 0..obs.len() {
        let g = post.gamma[t + 1];
        for (j, gj) in g.iter().enumerate() {
            s.weight[j] += gj;
            match obs {
                Obs::Daily(v) => {
                    let m = f64::from(v[t]);
                    if v[t] > 0 {
                        s.active[j] += gj;
                        s.excess[j] += (m - 1.0) * gj;
                        s.mass[j] += m * gj;
                    }
                }
                Obs::Windows(v) => {
                    s.sx[j] += f64::from(v[t].0) * gj;
                    s.sy[j] += v[t].1 as f64 * gj;
                }
            }
        }
    }
    s
}

fn m_step(
    model: &HmmModel,
    mode: ObservationMode,
    obs: &Obs,
    post: &Posteriors,
    daily_mu: f64,
    warnings: &mut Vec<String>,
) -> HmmModel {
    let mut next = model.clone();

    // Initial probabilities from the posterior of S_0.
    let g0 = post.gamma[0];
    let pi0 = clamp_prob(g0[0] / (g0[0] + g0[1]));
    next.pi = [pi0, 1.0 - pi0];

    // Transition probabilities from the pair posteriors.
    let mut from = [0.0; 2];
    let mut moved = [0.0; 2];
    for z in &post.zeta {
        from[0] += z[0][0] + z[0][1];
        from[1] += z[1][0] + z[1][1];
        moved[0] += z[0][1];
        moved[1] += z[1][0];
    }
    if from[0] > 0.0 {
        next.p0 = clamp_prob(moved[0] / from[0]);
    }
    if from[1] > 0.0 {
        next.q0 = clamp_prob(moved[1] / from[1]);
    }

    // Emission parameters per mode.
    let stats = emission_stats(obs, post);
    let delta = model.delta as f64;
    for j in 0..2 {
        if stats.weight[j] < 1e-12 {
            // State carries no posterior mass; keep its previous parameters.
            continue;
        }
        let (gamma_hat, mu_hat) = match mode {
            ObservationMode::DailyCounts => {
                let g = stats.active[j] / stats.weight[j];
                let mu = if stats.mass[j] > 0.0 {
                    stats.excess[j] / stats.mass[j]
                } else {
                    0.0
                };
                (g, mu)
            }
            ObservationMode::Joint => {
                let g = stats.sx[j] / (delta * stats.weight[j]);
                let mu = if stats.sy[j] > 0.0 {
                    1.0 - stats.sx[j] / stats.sy[j]
                } else {
                    0.0
                };
                (g, mu)
            }
            ObservationMode::ActiveDays => {
                (stats.sx[j] / (delta * stats.weight[j]), daily_mu)
            }
            ObservationMode::TotalAttacks => {
                // "Solution 1" asymptotics in the wide-window regime.
                let g = (1.0 / delta) * (1.0 + 2.0 / delta);
                let mu = if stats.sy[j] > 0.0 {
                    1.0 - stats.weight[j] / stats.sy[j] * (1.0 + 2.0 / delta)
                } else {
                    0.0
                };
                (g, mu)
            }
        };
        let mut gamma_hat = clamp_prob(gamma_hat);
        if mode == ObservationMode::TotalAttacks {
            let floor = 1.0 / delta + 1e-9;
            gamma_hat = gamma_hat.max(floor);
            if mu_hat <= gamma_hat && warnings.is_empty() {
                warnings.push(format!(
                    "total-attacks update violated mu > gamma for state {j} \
                     (mu = {mu_hat:.6}, gamma = {gamma_hat:.6}); wide-window \
                     asymptotics may not apply"
                ));
            }
        }
        next.emit[j] = HbgParams {
            gamma: gamma_hat,
            mu: clamp_prob(mu_hat),
        };
    }
    next
}

/// Fit the model by expectation-maximization.
///
/// Daily-counts and joint modes use exact M-steps, so their log-likelihood
/// traces are non-decreasing up to numerical slack. The active-days mode
/// substitutes a non-iterative continuation estimate and the total-attacks
/// mode an asymptotic solution, so their traces are reported but not
/// guaranteed monotone.
pub fn baum_welch(
    profile: &ActivityProfile,
    mode: ObservationMode,
    init: HmmModel,
    opts: FitOptions,
) -> Result<FitResult> {
    let obs = Obs::build(profile, mode);
    if obs.len() == 0 {
        return Err(Error::EmptyObservations);
    }
    let daily_mu = daily_mu_estimate(profile.counts());

    let mut model = init;
    let mut trace: Vec<f64> = Vec::new();
    let mut warnings = Vec::new();
    let mut converged = false;
    let mut m_steps = 0;
    loop {
        let lnb = ln_emission_table(&model, mode, &obs);
        let post = forward_backward_from_table(&model, &lnb)?;
        if let Some(&prev) = trace.last() {
            if (post.loglik - prev).abs() < opts.tol {
                trace.push(post.loglik);
                converged = true;
                break;
            }
        }
        trace.push(post.loglik);
        if m_steps >= opts.max_iters {
            break;
        }
        model = m_step(&model, mode, &obs, &post, daily_mu, &mut warnings);
        m_steps += 1;
    }

    Ok(FitResult {
        model,
        loglik_trace: trace,
        converged,
        warnings,
    })
}

/// Deterministic data-driven starting point: symmetric chain, emissions
/// moment-matched on the quietest and loudest terciles of the windows.
pub fn default_init(profile: &ActivityProfile) -> HmmModel {
    let windows = profile.all_windows();
    let mut order: Vec<usize> = (0..windows.len()).collect();
    order.sort_by_key(|&i| (windows[i].y, windows[i].x, i));
    let third = (windows.len() / 3).max(1);
    let quiet: Vec<&WindowMetrics> = order[..third].iter().map(|&i| &windows[i]).collect();
    let loud: Vec<&WindowMetrics> = order[windows.len() - third..]
        .iter()
        .map(|&i| &windows[i])
        .collect();

    let delta = profile.delta() as f64;
    let moments = |set: &[&WindowMetrics]| -> HbgParams {
        let sx: f64 = set.iter().map(|w| f64::from(w.x)).sum();
        let sy: f64 = set.iter().map(|w| w.y as f64).sum();
        let gamma = (sx / (delta * set.len() as f64)).clamp(0.02, 0.9);
        let mu = if sy > 0.0 {
            (1.0 - sx / sy).clamp(0.02, 0.9)
        } else {
            0.02
        };
        HbgParams { gamma, mu }
    };
    let mut emit = [moments(&quiet), moments(&loud)];
    if (emit[1].mean() - emit[0].mean()).abs() < 1e-3 {
        // Degenerate split (near-constant data); separate the states by hand.
        emit[1] = HbgParams {
            gamma: (emit[0].gamma * 1.5).clamp(0.02, 0.95),
            mu: (emit[0].mu * 1.2 + 0.05).clamp(0.02, 0.95),
        };
    }
    HmmModel {
        pi: [0.5, 0.5],
        p0: 0.3,
        q0: 0.3,
        emit,
        delta: profile.delta(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate_hmm, SimConfig, StateBinning};

    fn toy_model(p0: f64, q0: f64, pi: [f64; 2]) -> HmmModel {
        HmmModel::new(
            pi,
            p0,
            q0,
            [
                HbgParams::new(0.1, 0.3).unwrap(),
                HbgParams::new(0.4, 0.5).unwrap(),
            ],
            7,
        )
        .unwrap()
    }

    fn profile_from(counts: &[u32]) -> ActivityProfile {
        ActivityProfile::new(counts.to_vec(), 7).unwrap()
    }

    #[test]
    fn symmetric_model_gives_uniform_posterior() {
        let mut model = toy_model(0.3, 0.3, [0.5, 0.5]);
        model.emit[1] = model.emit[0];
        let profile = ActivityProfile::new(vec![2, 0, 0, 0, 0, 0, 0], 7).unwrap();
        let post = forward_backward(&model, &profile, ObservationMode::DailyCounts).unwrap();
        for g in &post.gamma {
            assert!((g[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn absorbing_chain_stays_in_state_zero() {
        let model = toy_model(0.0, 0.0, [1.0, 0.0]);
        let profile = profile_from(&[0, 1, 0, 2, 0, 0, 1]);
        let post = forward_backward(&model, &profile, ObservationMode::DailyCounts).unwrap();
        for g in &post.gamma {
            assert!((g[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_rows_normalize() {
        let model = toy_model(0.2, 0.4, [0.6, 0.4]);
        let profile = profile_from(&[0, 3, 0, 0, 1, 5, 0, 0, 0, 0, 2, 1, 0, 4]);
        for mode in [
            ObservationMode::DailyCounts,
            ObservationMode::ActiveDays,
            ObservationMode::TotalAttacks,
            ObservationMode::Joint,
        ] {
            let post = forward_backward(&model, &profile, mode).unwrap();
            for g in &post.gamma {
                assert!((g[0] + g[1] - 1.0).abs() < 1e-10);
            }
            for z in &post.zeta {
                let total: f64 = z.iter().flatten().sum();
                assert!((total - 1.0).abs() < 1e-10);
            }
            assert!(post.loglik.is_finite());
        }
    }

    /// Brute-force posteriors and path scores by enumerating every state
    /// path `S_0..S_n`.
    fn enumerate_paths(
        model: &HmmModel,
        profile: &ActivityProfile,
        mode: ObservationMode,
    ) -> (Vec<[f64; 2]>, f64, f64) {
        let obs = Obs::build(profile, mode);
        let lnb = ln_emission_table(model, mode, &obs);
        let n = lnb.len();
        let trans = model.transition();
        let mut gamma = vec![[0.0f64; 2]; n + 1];
        let mut total = 0.0;
        let mut best = f64::NEG_INFINITY;
        for mask in 0..(1u32 << (n + 1)) {
            let state = |t: usize| ((mask >> t) & 1) as usize;
            let mut p = model.pi[state(0)];
            for t in 1..=n {
                p *= trans[state(t - 1)][state(t)] * lnb[t - 1][state(t)].exp();
            }
            total += p;
            if p > best {
                best = p;
            }
            for t in 0..=n {
                gamma[t][state(t)] += p;
            }
        }
        for g in gamma.iter_mut() {
            let s = g[0] + g[1];
            g[0] /= s;
            g[1] /= s;
        }
        (gamma, total.ln(), best.ln())
    }

    #[test]
    fn forward_backward_matches_enumeration() {
        let model = toy_model(0.25, 0.45, [0.7, 0.3]);
        let profile = ActivityProfile::new(vec![0, 2, 0, 0, 4, 1, 0, 1], 2).unwrap();
        for mode in [ObservationMode::DailyCounts, ObservationMode::Joint] {
            let post = forward_backward(&model, &profile, mode).unwrap();
            let (gamma, loglik, _) = enumerate_paths(&model, &profile, mode);
            assert!((post.loglik - loglik).abs() < 1e-10);
            for (a, b) in post.gamma.iter().zip(&gamma) {
                assert!((a[0] - b[0]).abs() < 1e-10);
                assert!((a[1] - b[1]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn viterbi_matches_enumeration_score() {
        let model = toy_model(0.25, 0.45, [0.7, 0.3]);
        let profile = ActivityProfile::new(vec![0, 2, 0, 0, 4, 1, 0, 1, 3, 0], 2).unwrap();
        for mode in [ObservationMode::DailyCounts, ObservationMode::ActiveDays] {
            let path = viterbi(&model, &profile, mode).unwrap();
            let (_, _, best) = enumerate_paths(&model, &profile, mode);
            // Score the decoded path, maximizing over the silent S_0.
            let obs = Obs::build(&profile, mode);
            let lnb = ln_emission_table(&model, mode, &obs);
            let trans = model.transition();
            let first = path[0] as usize;
            let mut score = (model.pi[0] * trans[0][first])
                .max(model.pi[1] * trans[1][first])
                .ln()
                + lnb[0][first];
            for t in 1..path.len() {
                score += trans[path[t - 1] as usize][path[t] as usize].ln()
                    + lnb[t][path[t] as usize];
            }
            assert!((score - best).abs() < 1e-10, "mode {mode:?}");
        }
    }

    #[test]
    fn viterbi_prior_dominates_identical_emissions() {
        let mut model = toy_model(0.1, 0.1, [1.0, 0.0]);
        model.emit[1] = model.emit[0];
        let profile = profile_from(&[0, 1, 0, 2, 0, 0, 1]);
        let path = viterbi(&model, &profile, ObservationMode::DailyCounts).unwrap();
        assert!(path.iter().all(|&s| s == 0));
    }

    #[test]
    fn viterbi_flips_at_bursts_with_separated_emissions() {
        let model = HmmModel::new(
            [0.5, 0.5],
            0.1,
            0.1,
            [
                HbgParams::new(0.01, 0.1).unwrap(),
                HbgParams::new(0.9, 0.3).unwrap(),
            ],
            7,
        )
        .unwrap();
        let counts = vec![0, 0, 0, 0, 0, 0, 0, 3, 2, 4, 1, 2, 3, 1, 0, 0, 0, 0, 0, 0, 0];
        let profile = profile_from(&counts);
        let path = viterbi(&model, &profile, ObservationMode::DailyCounts).unwrap();
        let expected: Vec<u8> = counts.iter().map(|&c| u8::from(c > 0)).collect();
        assert_eq!(path, expected);
    }

    #[test]
    fn impossible_observation_is_reported_with_step() {
        // mu = 0 makes any count above 1 impossible in both states.
        let model = HmmModel::new(
            [0.5, 0.5],
            0.2,
            0.2,
            [
                HbgParams::new(0.2, 0.0).unwrap(),
                HbgParams::new(0.6, 0.0).unwrap(),
            ],
            7,
        )
        .unwrap();
        let profile = profile_from(&[0, 1, 0, 5, 0, 0, 1]);
        let err = forward_backward(&model, &profile, ObservationMode::DailyCounts).unwrap_err();
        match err {
            Error::ImpossibleObservation { step } => assert_eq!(step, 4),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn em_increases_loglik_daily_and_joint() {
        let truth = HmmModel::new(
            [0.6, 0.4],
            0.4,
            0.6,
            [
                HbgParams::new(0.1, 0.3).unwrap(),
                HbgParams::new(0.2, 0.4).unwrap(),
            ],
            7,
        )
        .unwrap();
        let cfg = SimConfig {
            model: truth,
            n_days: 7 * 120,
            seed: 99,
            binning: StateBinning::FreeRunning,
        };
        let (counts, _) = simulate_hmm(&cfg).unwrap();
        let profile = ActivityProfile::new(counts, 7).unwrap();
        for mode in [ObservationMode::DailyCounts, ObservationMode::Joint] {
            let fit = baum_welch(&profile, mode, default_init(&profile), FitOptions::default())
                .unwrap();
            for pair in fit.loglik_trace.windows(2) {
                assert!(
                    pair[1] >= pair[0] - 1e-9,
                    "loglik decreased in {mode:?}: {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
            assert!(fit.loglik_trace.len() > 2);
        }
    }

    #[test]
    fn unreachable_state_keeps_other_state_estimates() {
        let truth = toy_model(0.0, 0.0, [1.0, 0.0]);
        let cfg = SimConfig {
            model: truth.clone(),
            n_days: 7 * 400,
            seed: 17,
            binning: StateBinning::FreeRunning,
        };
        let (counts, states) = simulate_hmm(&cfg).unwrap();
        assert!(states.iter().all(|&s| s == 0));
        let profile = ActivityProfile::new(counts, 7).unwrap();
        let mut init = truth.clone();
        init.emit[0] = HbgParams::new(0.3, 0.5).unwrap();
        let fit = baum_welch(
            &profile,
            ObservationMode::DailyCounts,
            init,
            FitOptions::default(),
        )
        .unwrap();
        assert!((fit.model.emit[0].gamma - 0.1).abs() < 0.03);
        assert!((fit.model.emit[0].mu - 0.3).abs() < 0.06);
    }

    #[test]
    fn solution_one_satisfies_its_stationarity_relation() {
        // The "Solution 1" pair is an exact solution of the relation
        // mu = 1 - gamma * delta * (Σ gamma_n) / (Σ Y_n gamma_n); the
        // residual must vanish and stay vanished as delta grows.
        let posteriors = [0.3, 0.9, 0.5, 0.1, 0.7, 0.8];
        let y_fracs = [0.4, 1.9, 1.1, 0.2, 1.5, 0.8];
        let mut prev = f64::INFINITY;
        for delta in [7usize, 14, 28, 56] {
            let d = delta as f64;
            let sw: f64 = posteriors.iter().sum();
            let sy: f64 = posteriors
                .iter()
                .zip(y_fracs)
                .map(|(g, f)| g * (f * d).round())
                .sum();
            let gamma_hat = (1.0 / d) * (1.0 + 2.0 / d);
            let mu_hat = 1.0 - sw / sy * (1.0 + 2.0 / d);
            let residual = (mu_hat - (1.0 - gamma_hat * d * sw / sy)).abs();
            assert!(residual < 1e-12, "delta {delta}: residual {residual}");
            assert!(residual <= prev + 1e-15);
            prev = residual;
        }
    }

    #[test]
    fn viterbi_dominates_alternative_paths() {
        use rand::{RngExt, SeedableRng};
        let model = toy_model(0.3, 0.5, [0.6, 0.4]);
        let cfg = SimConfig {
            model: model.clone(),
            n_days: 7 * 30,
            seed: 4,
            binning: StateBinning::FreeRunning,
        };
        let (counts, _) = simulate_hmm(&cfg).unwrap();
        let profile = ActivityProfile::new(counts, 7).unwrap();
        let mode = ObservationMode::DailyCounts;

        let obs = Obs::build(&profile, mode);
        let lnb = ln_emission_table(&model, mode, &obs);
        let trans = model.transition();
        let score_of = |path: &[u8]| -> f64 {
            let first = path[0] as usize;
            let mut score = (model.pi[0] * trans[0][first])
                .max(model.pi[1] * trans[1][first])
                .ln()
                + lnb[0][first];
            for t in 1..path.len() {
                score +=
                    trans[path[t - 1] as usize][path[t] as usize].ln() + lnb[t][path[t] as usize];
            }
            score
        };

        let best = viterbi(&model, &profile, mode).unwrap();
        let best_score = score_of(&best);

        let post = forward_backward(&model, &profile, mode).unwrap();
        let argmax_path: Vec<u8> = (1..=obs.len())
            .map(|t| u8::from(post.gamma[t][1] > post.gamma[t][0]))
            .collect();
        assert!(best_score >= score_of(&argmax_path) - 1e-9);

        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(99);
        for _ in 0..100 {
            let random_path: Vec<u8> =
                (0..obs.len()).map(|_| rng.random_range(0..2u8)).collect();
            assert!(best_score >= score_of(&random_path) - 1e-9);
        }
    }

    #[test]
    fn canonicalize_orders_states_by_mean() {
        let model = HmmModel::new(
            [0.2, 0.8],
            0.1,
            0.7,
            [
                HbgParams::new(0.5, 0.4).unwrap(),
                HbgParams::new(0.1, 0.2).unwrap(),
            ],
            7,
        )
        .unwrap()
        .canonicalized();
        assert!(model.emit[1].mean() >= model.emit[0].mean());
        assert_eq!(model.pi, [0.8, 0.2]);
        assert_eq!((model.p0, model.q0), (0.7, 0.1));
    }
}
