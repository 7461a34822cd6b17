//! Detection and attribution of spurts/downfalls in sparse daily event-count
//! series.
//!
//! A monitored group produces a daily count series `M_1..M_N` (the *activity
//! profile*). The series is cut into disjoint windows of `delta` days and each
//! window is summarized by two attack metrics — `X_n`, the number of active
//! days, and `Y_n`, the total count — plus the *attack frequency vector*
//! `P_n`, the within-window counts normalized by the window total.
//!
//! Two families of pipelines decide, per window, whether the group is
//! *resilient* (activity sustained across many days) and/or *coordinating*
//! (many events packed into few days):
//!
//! - **Parametric**: a two-state hidden Markov model with hurdle-based
//!   geometric emissions, fitted by Baum–Welch on any of four observation
//!   sequences (`{M_i}`, `{X_n}`, `{Y_n}`, `{(X_n, Y_n)}`) and decoded with
//!   Viterbi ([`hmm`], [`hbg`]).
//! - **Non-parametric**: Schur functionals (Shannon entropy, normalized power
//!   mean) of `P_n`, grounded in majorization and catalytic majorization
//!   ([`majorize`]).
//!
//! [`classify`] turns either pipeline's output into per-window tactic labels
//! and maintains cumulative tracking functions; [`simulate`] generates ground
//! truth; [`evaluate`] scores pipelines (missed detections / false alarms)
//! and runs the Monte Carlo studies comparing the functional families.
//!
//! # Quick start
//!
//! ```
//! use spurt_core::classify::{label_majorization, Thresholds};
//! use spurt_core::{ActivityProfile, ObservationMode};
//! use spurt_core::hmm::{baum_welch, default_init, viterbi, FitOptions};
//!
//! // Two weeks of daily counts: a quiet week, then a sustained one.
//! let counts = vec![0, 2, 0, 0, 0, 0, 1, 2, 1, 1, 3, 1, 1, 2];
//! let profile = ActivityProfile::new(counts, 7)?;
//!
//! // Non-parametric labels straight from the attack frequency vectors.
//! let labels = label_majorization(&profile.all_windows(), &Thresholds::default());
//! assert!(!labels[0].resilient && labels[1].resilient);
//!
//! // Parametric route: fit, relabel states by activity, decode.
//! let fit = baum_welch(
//!     &profile,
//!     ObservationMode::DailyCounts,
//!     default_init(&profile),
//!     FitOptions::default(),
//! )?;
//! let states = viterbi(&fit.model.canonicalized(), &profile, ObservationMode::DailyCounts)?;
//! assert_eq!(states.len(), 14);
//! # Ok::<(), spurt_core::Error>(())
//! ```

#![forbid(unsafe_code)]

pub mod classify;
pub mod error;
pub mod evaluate;
pub mod hbg;
pub mod hmm;
pub mod majorize;
pub mod profile;
pub mod simulate;

pub use classify::{TacticLabels, Thresholds, TrackingSeries};
pub use error::{Error, Result};
pub use hbg::HbgParams;
pub use hmm::{FitOptions, FitResult, HmmModel, ObservationMode, Posteriors};
pub use majorize::{AlphaGrid, ProbVector};
pub use profile::{ActivityProfile, WindowMetrics};
pub use simulate::{SimConfig, StateBinning, VectorModel};
