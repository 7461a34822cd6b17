//! Per-window tactic labels and cumulative tracking functions.
//!
//! Three rule families turn pipeline outputs into labels:
//!
//! - daily rule: binned Viterbi day-states plus attack-metric thresholds;
//! - window rule: a window-mode state estimate maps directly to the tactic
//!   its observation sequence monitors;
//! - majorization rule: Shannon entropy and normalized power mean of the
//!   attack frequency vector against floors, plus attack-metric thresholds.
//!
//! All threshold comparisons are strict.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::ObservationMode;
use crate::majorize::{normalized_power_mean, shannon_entropy};
use crate::profile::WindowMetrics;

/// Classification thresholds for every rule family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Ground-truth attack-metric thresholds.
    pub eta_x: f64,
    pub eta_y: f64,
    /// Daily-rule thresholds: state-sum and attack metrics.
    pub eta_hat: f64,
    pub eta_hat_x: f64,
    pub eta_hat_y: f64,
    /// Majorization-rule attack-metric thresholds.
    pub eta_tilde_x: f64,
    pub eta_tilde_y: f64,
    /// Majorization-rule functional floors.
    pub se_floor: f64,
    pub npm_floor: f64,
    /// Power-mean index used by the majorization rule and tracking.
    pub alpha_star: f64,
}

impl Default for Thresholds {
    /// Settings used throughout the comparative study.
    fn default() -> Self {
        Self {
            eta_x: 3.0,
            eta_y: 6.0,
            eta_hat: 3.0,
            eta_hat_x: 3.0,
            eta_hat_y: 5.0,
            eta_tilde_x: 3.0,
            eta_tilde_y: 6.0,
            se_floor: 1.0,
            npm_floor: 0.0625,
            alpha_star: 2.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eta_x", self.eta_x),
            ("eta_y", self.eta_y),
            ("eta_hat", self.eta_hat),
            ("eta_hat_x", self.eta_hat_x),
            ("eta_hat_y", self.eta_hat_y),
            ("eta_tilde_x", self.eta_tilde_x),
            ("eta_tilde_y", self.eta_tilde_y),
            ("se_floor", self.se_floor),
            ("npm_floor", self.npm_floor),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if self.alpha_star.is_nan() || self.alpha_star < 1.0 {
            return Err(Error::InvalidParameter {
                name: "alpha_star",
                value: self.alpha_star,
            });
        }
        Ok(())
    }
}

/// Per-window tactic decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TacticLabels {
    pub resilient: bool,
    pub coordinating: bool,
    pub both: bool,
    pub active: bool,
}

/// Shannon entropy and normalized power mean of a window's attack frequency
/// vector; both zero for an empty window.
pub fn window_functionals(metrics: &WindowMetrics, alpha_star: f64) -> (f64, f64) {
    match metrics.freq_vector() {
        Some(p) => (shannon_entropy(&p), normalized_power_mean(&p, alpha_star)),
        None => (0.0, 0.0),
    }
}

/// Daily rule: bin decoded day-states over each window and combine the
/// state-sum threshold with the attack-metric thresholds.
///
/// `day_states` must cover at least `metrics.len() * delta` days; extra
/// trailing states (days beyond the last complete window) are ignored.
pub fn label_from_daily_states(
    day_states: &[u8],
    metrics: &[WindowMetrics],
    delta: usize,
    th: &Thresholds,
) -> Result<Vec<TacticLabels>> {
    let needed = metrics.len() * delta;
    if day_states.len() < needed {
        return Err(Error::LengthMismatch {
            left: day_states.len(),
            right: needed,
        });
    }
    Ok(metrics
        .iter()
        .enumerate()
        .map(|(n, m)| {
            let window = &day_states[n * delta..(n + 1) * delta];
            let state_sum: f64 = window.iter().map(|&s| f64::from(s)).sum();
            let active = state_sum > th.eta_hat;
            let x = f64::from(m.x);
            let y = m.y as f64;
            TacticLabels {
                resilient: active && x > th.eta_hat_x,
                coordinating: active && y > th.eta_hat_y,
                both: active && x > th.eta_hat_x && y > th.eta_hat_y,
                active,
            }
        })
        .collect())
}

/// Window rule: a state estimate of 1 maps to the tactic monitored by the
/// observation sequence (active days -> resilient, totals -> coordinating,
/// joint -> both); the other labels stay unset.
pub fn label_from_window_states(
    window_states: &[u8],
    mode: ObservationMode,
) -> Result<Vec<TacticLabels>> {
    if !mode.is_windowed() {
        return Err(Error::domain(
            "window rule needs a window-mode state sequence",
        ));
    }
    Ok(window_states
        .iter()
        .map(|&s| {
            let on = s == 1;
            let mut labels = TacticLabels::default();
            match mode {
                ObservationMode::ActiveDays => labels.resilient = on,
                ObservationMode::TotalAttacks => labels.coordinating = on,
                ObservationMode::Joint => labels.both = on,
                ObservationMode::DailyCounts => unreachable!(),
            }
            labels
        })
        .collect())
}

/// Majorization rule: entropy above its floor flags resilience, normalized
/// power mean above its floor flags coordination, each gated by the
/// matching attack metric; `both` is the conjunction. Empty windows carry
/// the zero sentinel and never label.
pub fn label_majorization(metrics: &[WindowMetrics], th: &Thresholds) -> Vec<TacticLabels> {
    metrics
        .iter()
        .map(|m| {
            let (se, npm) = window_functionals(m, th.alpha_star);
            let resilient = se > th.se_floor && f64::from(m.x) > th.eta_tilde_x;
            let coordinating = npm > th.npm_floor && (m.y as f64) > th.eta_tilde_y;
            TacticLabels {
                resilient,
                coordinating,
                both: resilient && coordinating,
                active: false,
            }
        })
        .collect()
}

/// True simulator states, per day or per window.
#[derive(Debug, Clone, Copy)]
pub enum TrueStates<'a> {
    Daily(&'a [u8]),
    PerWindow(&'a [u8]),
}

/// Ground-truth labels: the window must sit entirely in the active state
/// (for daily states, every day of the window) and clear the attack-metric
/// threshold for the tactic.
pub fn ground_truth_labels(
    true_states: TrueStates<'_>,
    metrics: &[WindowMetrics],
    delta: usize,
    th: &Thresholds,
) -> Result<Vec<TacticLabels>> {
    let window_active: Vec<bool> = match true_states {
        TrueStates::Daily(states) => {
            let needed = metrics.len() * delta;
            if states.len() < needed {
                return Err(Error::LengthMismatch {
                    left: states.len(),
                    right: needed,
                });
            }
            (0..metrics.len())
                .map(|n| states[n * delta..(n + 1) * delta].iter().all(|&s| s == 1))
                .collect()
        }
        TrueStates::PerWindow(states) => {
            if states.len() < metrics.len() {
                return Err(Error::LengthMismatch {
                    left: states.len(),
                    right: metrics.len(),
                });
            }
            states.iter().take(metrics.len()).map(|&s| s == 1).collect()
        }
    };
    Ok(metrics
        .iter()
        .zip(window_active)
        .map(|(m, active)| {
            let x = f64::from(m.x);
            let y = m.y as f64;
            TacticLabels {
                resilient: active && x > th.eta_x,
                coordinating: active && y > th.eta_y,
                both: active && x > th.eta_x && y > th.eta_y,
                active,
            }
        })
        .collect())
}

/// Mean-centered cumulative tracking of resilience and coordination.
///
/// Both series start at zero and telescope back to zero at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingSeries {
    /// `res[n]` for `n = 0..=n_max`.
    pub res: Vec<f64>,
    /// `coord[n]` for `n = 0..=n_max`.
    pub coord: Vec<f64>,
}

/// Accumulate `SE + X` (resilience) and `NPM + Y` (coordination) increments,
/// centered by their means over the first `n_max` windows.
pub fn tracking_update(
    metrics: &[WindowMetrics],
    alpha_star: f64,
    n_max: usize,
) -> Result<TrackingSeries> {
    if n_max == 0 || n_max > metrics.len() {
        return Err(Error::WindowOutOfRange {
            index: n_max,
            count: metrics.len(),
        });
    }
    let increments: Vec<(f64, f64)> = metrics[..n_max]
        .iter()
        .map(|m| {
            let (se, npm) = window_functionals(m, alpha_star);
            (se + f64::from(m.x), npm + m.y as f64)
        })
        .collect();
    let mean_res: f64 = increments.iter().map(|i| i.0).sum::<f64>() / n_max as f64;
    let mean_coord: f64 = increments.iter().map(|i| i.1).sum::<f64>() / n_max as f64;

    let mut res = Vec::with_capacity(n_max + 1);
    let mut coord = Vec::with_capacity(n_max + 1);
    res.push(0.0);
    coord.push(0.0);
    for (r, c) in increments {
        res.push(res.last().unwrap() + r - mean_res);
        coord.push(coord.last().unwrap() + c - mean_coord);
    }
    Ok(TrackingSeries { res, coord })
}
