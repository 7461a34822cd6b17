//! Scoring against ground truth and the Monte Carlo studies.
//!
//! [`confusion`] reports missed-detection and false-alarm rates of predicted
//! tactic labels. The study functions reproduce the single-function proxy
//! efficacy table, the alpha-extreme CDFs and the benchmark divergence
//! curves. All Monte Carlo trials draw from per-trial RNG streams, so
//! results are independent of how trial ranges are split across workers.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::classify::TacticLabels;
use crate::error::{Error, Result};
use crate::majorize::{
    extension_power_mean, normalized_power_mean, power_mean, power_sum, shannon_entropy,
    AlphaGrid, ProbVector, TOL,
};
use crate::simulate::{sample_vector_pair, stream_rng, VectorModel};

/// Which tactic column of a label sequence to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelKind {
    Resilient,
    Coordinating,
    Both,
    Active,
}

impl LabelKind {
    pub fn of(self, labels: &TacticLabels) -> bool {
        match self {
            LabelKind::Resilient => labels.resilient,
            LabelKind::Coordinating => labels.coordinating,
            LabelKind::Both => labels.both,
            LabelKind::Active => labels.active,
        }
    }
}

/// Missed-detection / false-alarm summary of one label column.
///
/// `p_md` is the fraction of true windows not declared; `p_fa` the fraction
/// of declared windows that are not true. A zero denominator flags the rate
/// as undefined and reports 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConfusionReport {
    pub n_true: usize,
    pub n_declared: usize,
    pub n_missed: usize,
    pub n_false: usize,
    pub p_md: f64,
    pub p_fa: f64,
    pub se_md: f64,
    pub se_fa: f64,
    pub p_md_defined: bool,
    pub p_fa_defined: bool,
}

fn rate_with_se(numerator: usize, denominator: usize) -> (f64, f64, bool) {
    if denominator == 0 {
        return (0.0, 0.0, false);
    }
    let p = numerator as f64 / denominator as f64;
    let se = (p * (1.0 - p) / denominator as f64).sqrt();
    (p, se, true)
}

/// Score predicted labels against truth for one tactic column.
pub fn confusion(
    truth: &[TacticLabels],
    pred: &[TacticLabels],
    which: LabelKind,
) -> Result<ConfusionReport> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: pred.len(),
        });
    }
    let mut n_true = 0;
    let mut n_declared = 0;
    let mut n_missed = 0;
    let mut n_false = 0;
    for (t, p) in truth.iter().zip(pred) {
        let t = which.of(t);
        let p = which.of(p);
        n_true += usize::from(t);
        n_declared += usize::from(p);
        n_missed += usize::from(t && !p);
        n_false += usize::from(p && !t);
    }
    let (p_md, se_md, p_md_defined) = rate_with_se(n_missed, n_true);
    let (p_fa, se_fa, p_fa_defined) = rate_with_se(n_false, n_declared);
    Ok(ConfusionReport {
        n_true,
        n_declared,
        n_missed,
        n_false,
        p_md,
        p_fa,
        se_md,
        se_fa,
        p_md_defined,
        p_fa_defined,
    })
}

// ---------------------------------------------------------------------------
// Single-function proxy efficacy
// ---------------------------------------------------------------------------

/// Power-mean inequality family at the finite grid points for `a` trumped
/// by `b`, with inclusive comparisons throughout (the open-interval
/// conditions have no separate endpoint inequalities).
///
/// Cross-support comparisons follow the continuous extensions under which
/// the family is monotone for the majorization order: power sums at finite
/// positive indices (the per-vector normalization cancels inside the
/// theorem's full-support scope and would otherwise pin the support
/// counts) and zero-extended power means at nonpositive indices.
fn pm_family_event(a: &ProbVector, b: &ProbVector, grid: &AlphaGrid) -> bool {
    for alpha in grid.above_one_desc().filter(|al| al.is_finite()) {
        if power_sum(a, alpha) > power_sum(b, alpha) + TOL {
            return false;
        }
    }
    for alpha in grid.below_one_asc().filter(|al| al.is_finite()) {
        let ok = if alpha > 0.0 {
            power_sum(a, alpha) >= power_sum(b, alpha) - TOL
        } else {
            extension_power_mean(a, alpha) >= extension_power_mean(b, alpha) - TOL
        };
        if !ok {
            return false;
        }
    }
    shannon_entropy(a) >= shannon_entropy(b) - TOL
}

/// Normalized-power-mean inequality family for `a` trumped by `b`: the
/// printed normalized form above 1 (inclusive at the +inf limit), its
/// zero-extended version at nonpositive indices, and the entropy condition.
/// The band (0, 1) carries no Schur information for this functional and is
/// not checked.
fn npm_family_event(a: &ProbVector, b: &ProbVector, grid: &AlphaGrid) -> bool {
    for alpha in grid.above_one_desc().filter(|al| al.is_finite()) {
        if normalized_power_mean(a, alpha) > normalized_power_mean(b, alpha) + TOL {
            return false;
        }
    }
    for alpha in grid.below_one_asc().filter(|al| al.is_finite() && *al <= 0.0) {
        let na = extension_power_mean(a, alpha) / a.nz() as f64;
        let nb = extension_power_mean(b, alpha) / b.nz() as f64;
        if na < nb - TOL {
            return false;
        }
    }
    shannon_entropy(a) >= shannon_entropy(b) - TOL
}

/// Trumped-candidate choice of the proxy at `alpha_star`: `Some(true)` when
/// `p` is nominated, `None` on a proxy tie.
///
/// At `alpha_star = 1` the printed power means collapse to functions of the
/// positive-entry count alone, so the proxy is read as the limit from
/// above: order by support count, then by entropy (the first-order term of
/// the expansion around 1).
fn proxy_orientation(
    p: &ProbVector,
    q: &ProbVector,
    alpha_star: f64,
    normalized: bool,
) -> Option<bool> {
    if alpha_star == 1.0 {
        if p.nz() != q.nz() {
            return Some(p.nz() > q.nz());
        }
        let diff = shannon_entropy(p) - shannon_entropy(q);
        if diff.abs() <= TOL {
            return None;
        }
        return Some(diff > 0.0);
    }
    let eval = |v: &ProbVector| {
        if normalized {
            normalized_power_mean(v, alpha_star)
        } else {
            power_mean(v, alpha_star)
        }
    };
    let diff = eval(p) - eval(q);
    if diff.abs() <= TOL {
        None
    } else {
        Some(diff < 0.0)
    }
}

/// Raw tally of a single-function study slice; mergeable across workers.
#[derive(Debug, Clone, Default)]
pub struct StudyCounts {
    /// Per alpha-star: `[pm, npm]` trials where the proxy inequality held.
    pub denom: Vec<[u64; 2]>,
    /// Per alpha-star: `[pm, npm]` trials where the full event also held.
    pub hits: Vec<[u64; 2]>,
}

impl StudyCounts {
    fn zeroed(n_alphas: usize) -> Self {
        Self {
            denom: vec![[0; 2]; n_alphas],
            hits: vec![[0; 2]; n_alphas],
        }
    }

    pub fn merge(&mut self, other: &StudyCounts) {
        for (a, b) in self.denom.iter_mut().zip(&other.denom) {
            a[0] += b[0];
            a[1] += b[1];
        }
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            a[0] += b[0];
            a[1] += b[1];
        }
    }
}

/// Run trials `trials` of the single-function study; deterministic in
/// `(seed, trial index)` regardless of range splitting.
///
/// Per trial, each proxy (the power mean or the normalized power mean at an
/// `alpha_star`) nominates the side with the smaller proxy value as the
/// trumped candidate; proxy ties within [`TOL`] drop the trial from that
/// cell. The hit event is the nominating functional's own inequality family
/// over the whole grid.
pub fn single_function_counts(
    model: VectorModel,
    delta: usize,
    alpha_stars: &[f64],
    seed: u64,
    trials: Range<u64>,
    grid: &AlphaGrid,
) -> StudyCounts {
    let mut counts = StudyCounts::zeroed(alpha_stars.len());
    for trial in trials {
        let mut rng = stream_rng(seed, trial);
        let (p, q) = sample_vector_pair(model, delta, &mut rng);
        // The family events depend only on functional and orientation;
        // evaluate lazily, at most once each.
        let mut memo = [[None::<bool>; 2]; 2];
        let mut family_event = |normalized: bool, p_first: bool| -> bool {
            *memo[usize::from(normalized)][usize::from(p_first)].get_or_insert_with(|| {
                let (a, b) = if p_first { (&p, &q) } else { (&q, &p) };
                if normalized {
                    npm_family_event(a, b, grid)
                } else {
                    pm_family_event(a, b, grid)
                }
            })
        };
        for (ai, &alpha_star) in alpha_stars.iter().enumerate() {
            for (fi, normalized) in [(0, false), (1, true)] {
                let Some(p_first) = proxy_orientation(&p, &q, alpha_star, normalized) else {
                    continue;
                };
                counts.denom[ai][fi] += 1;
                if family_event(normalized, p_first) {
                    counts.hits[ai][fi] += 1;
                }
            }
        }
    }
    counts
}

/// One conditional-probability estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StudyCell {
    pub value: f64,
    pub se: f64,
    pub n: u64,
    pub defined: bool,
}

/// Conditional probabilities that the full comparability event holds given
/// the single-function proxy, per alpha-star, for PM and NPM.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingleFunctionStudy {
    pub alpha_stars: Vec<f64>,
    pub pm: Vec<StudyCell>,
    pub npm: Vec<StudyCell>,
}

impl SingleFunctionStudy {
    pub fn from_counts(alpha_stars: &[f64], counts: &StudyCounts) -> Self {
        let cell = |hits: u64, denom: u64| {
            if denom == 0 {
                return StudyCell {
                    value: 0.0,
                    se: 0.0,
                    n: 0,
                    defined: false,
                };
            }
            let p = hits as f64 / denom as f64;
            StudyCell {
                value: p,
                se: (p * (1.0 - p) / denom as f64).sqrt(),
                n: denom,
                defined: true,
            }
        };
        let pm = counts
            .denom
            .iter()
            .zip(&counts.hits)
            .map(|(d, h)| cell(h[0], d[0]))
            .collect();
        let npm = counts
            .denom
            .iter()
            .zip(&counts.hits)
            .map(|(d, h)| cell(h[1], d[1]))
            .collect();
        Self {
            alpha_stars: alpha_stars.to_vec(),
            pm,
            npm,
        }
    }
}

/// Single-threaded convenience wrapper over [`single_function_counts`].
pub fn single_function_study(
    model: VectorModel,
    delta: usize,
    alpha_stars: &[f64],
    n_trials: u64,
    seed: u64,
    grid: &AlphaGrid,
) -> SingleFunctionStudy {
    let counts = single_function_counts(model, delta, alpha_stars, seed, 0..n_trials, grid);
    SingleFunctionStudy::from_counts(alpha_stars, &counts)
}

// ---------------------------------------------------------------------------
// Alpha-extreme CDFs
// ---------------------------------------------------------------------------

/// Empirical CDF over the observed values of a discrete statistic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub values: Vec<f64>,
    pub cum: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        let n = samples.len() as f64;
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut values = Vec::new();
        let mut cum = Vec::new();
        let mut seen = 0usize;
        let mut i = 0usize;
        while i < samples.len() {
            let v = samples[i];
            while i < samples.len() && samples[i] == v {
                i += 1;
                seen += 1;
            }
            values.push(v);
            cum.push(seen as f64 / n);
        }
        Self { values, cum }
    }

    /// Probability mass at exactly `v`.
    pub fn mass_at(&self, v: f64) -> f64 {
        let mut prev = 0.0;
        for (value, cum) in self.values.iter().zip(&self.cum) {
            if *value == v {
                return cum - prev;
            }
            prev = *cum;
        }
        0.0
    }
}

/// Raw alpha-extreme samples of a trial slice, in trial order.
#[derive(Debug, Clone, Default)]
pub struct AlphaExtremeSamples {
    pub alpha_max_pm: Vec<f64>,
    pub alpha_max_npm: Vec<f64>,
    pub alpha_min_pm: Vec<f64>,
    pub alpha_min_npm: Vec<f64>,
}

impl AlphaExtremeSamples {
    pub fn merge(&mut self, other: AlphaExtremeSamples) {
        self.alpha_max_pm.extend(other.alpha_max_pm);
        self.alpha_max_npm.extend(other.alpha_max_npm);
        self.alpha_min_pm.extend(other.alpha_min_pm);
        self.alpha_min_npm.extend(other.alpha_min_npm);
    }
}

/// Collect alpha extremes for trials `trials`; deterministic per trial.
pub fn alpha_extreme_samples(
    model: VectorModel,
    delta: usize,
    seed: u64,
    trials: Range<u64>,
    grid: &AlphaGrid,
) -> AlphaExtremeSamples {
    let mut out = AlphaExtremeSamples::default();
    for trial in trials {
        let mut rng = stream_rng(seed, trial);
        let (p, q) = sample_vector_pair(model, delta, &mut rng);
        let ex = crate::majorize::alpha_extremes(&p, &q, grid);
        out.alpha_max_pm.push(ex.alpha_max_pm);
        out.alpha_max_npm.push(ex.alpha_max_npm);
        out.alpha_min_pm.push(ex.alpha_min_pm);
        out.alpha_min_npm.push(ex.alpha_min_npm);
    }
    out
}

/// Empirical CDFs of the four alpha extremes and of the PM-NPM differences.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaCdfStudy {
    pub alpha_max_pm: EmpiricalCdf,
    pub alpha_max_npm: EmpiricalCdf,
    pub alpha_min_pm: EmpiricalCdf,
    pub alpha_min_npm: EmpiricalCdf,
    pub diff_max: EmpiricalCdf,
    pub diff_min: EmpiricalCdf,
}

impl AlphaCdfStudy {
    pub fn from_samples(samples: &AlphaExtremeSamples) -> Self {
        let diff = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x - y).collect()
        };
        Self {
            alpha_max_pm: EmpiricalCdf::from_samples(samples.alpha_max_pm.clone()),
            alpha_max_npm: EmpiricalCdf::from_samples(samples.alpha_max_npm.clone()),
            alpha_min_pm: EmpiricalCdf::from_samples(samples.alpha_min_pm.clone()),
            alpha_min_npm: EmpiricalCdf::from_samples(samples.alpha_min_npm.clone()),
            diff_max: EmpiricalCdf::from_samples(diff(
                &samples.alpha_max_pm,
                &samples.alpha_max_npm,
            )),
            diff_min: EmpiricalCdf::from_samples(diff(
                &samples.alpha_min_pm,
                &samples.alpha_min_npm,
            )),
        }
    }
}

/// Single-threaded convenience wrapper over [`alpha_extreme_samples`].
pub fn alpha_cdf_study(
    model: VectorModel,
    delta: usize,
    n_trials: u64,
    seed: u64,
    grid: &AlphaGrid,
) -> AlphaCdfStudy {
    AlphaCdfStudy::from_samples(&alpha_extreme_samples(model, delta, seed, 0..n_trials, grid))
}

// ---------------------------------------------------------------------------
// Benchmark divergence curves
// ---------------------------------------------------------------------------

/// Absolute functional gaps between a spread pattern and the two benchmark
/// vectors (fully coordinated point mass, fully resilient uniform).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DivergenceRow {
    /// Days carrying exactly one event; the remaining mass sits on one day.
    pub k: usize,
    pub d_se_res: f64,
    pub d_se_coord: f64,
    pub d_npm_res: f64,
    pub d_npm_coord: f64,
}

/// Sweep `k = 0..delta`: `total - k` events on one day and one event on each
/// of `k` further days, compared against the benchmarks. Needs
/// `total >= delta` so every pattern has mass left for its first day.
pub fn benchmark_divergence(
    total: u32,
    delta: usize,
    alpha_star: f64,
) -> Result<Vec<DivergenceRow>> {
    if u64::from(total) < delta as u64 {
        return Err(Error::InvalidParameter {
            name: "total",
            value: f64::from(total),
        });
    }
    let coord_bench = ProbVector::point_mass(delta);
    let res_bench = ProbVector::uniform(delta);
    let se_c = shannon_entropy(&coord_bench);
    let se_r = shannon_entropy(&res_bench);
    let npm_c = normalized_power_mean(&coord_bench, alpha_star);
    let npm_r = normalized_power_mean(&res_bench, alpha_star);

    (0..delta)
        .map(|k| {
            let mut entries = vec![0.0; delta];
            entries[0] = f64::from(total - k as u32) / f64::from(total);
            for e in entries.iter_mut().skip(1).take(k) {
                *e = 1.0 / f64::from(total);
            }
            let p = ProbVector::new(entries)?;
            let se = shannon_entropy(&p);
            let npm = normalized_power_mean(&p, alpha_star);
            Ok(DivergenceRow {
                k,
                d_se_res: (se_r - se).abs(),
                d_se_coord: (se_c - se).abs(),
                d_npm_res: (npm_r - npm).abs(),
                d_npm_coord: (npm_c - npm).abs(),
            })
        })
        .collect()
}
