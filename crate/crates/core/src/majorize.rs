//! Majorization and catalytic-majorization toolkit.
//!
//! Probability vectors are compared by the majorization partial order
//! (prefix sums of the sorted entries), lifted to catalytic majorization
//! (trumping) through Kronecker products, and proxied by Schur-convex /
//! Schur-concave functionals: Shannon entropy, geometric mean, power mean
//! and normalized power mean.
//!
//! Power means here are normalized by the number of positive entries, and
//! for `alpha <= 0` they are evaluated on the positive support. The limits
//! `alpha -> +inf`, `-inf` and `0` map to the largest entry, the smallest
//! positive entry and the support geometric mean respectively.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for simplex membership and for strict-inequality slack.
pub const TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// ProbVector
// ---------------------------------------------------------------------------

/// A finite probability vector: nonnegative entries summing to one.
///
/// Keeps both the entries in construction order and a non-increasing sorted
/// copy; all majorization machinery works on the sorted view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVector {
    entries: Vec<f64>,
    sorted: Vec<f64>,
}

impl ProbVector {
    /// Build from entries that must already sum to one (tolerance [`TOL`]).
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("probability vector must be nonempty"));
        }
        for &e in &entries {
            if !e.is_finite() || e < 0.0 {
                return Err(Error::InvalidParameter {
                    name: "entry",
                    value: e,
                });
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > TOL {
            return Err(Error::InvalidParameter {
                name: "entry sum",
                value: sum,
            });
        }
        let mut sorted = entries.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self { entries, sorted })
    }

    /// Normalize positive weights into a probability vector.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if sum.is_nan() || sum <= 0.0 || sum.is_infinite() {
            return Err(Error::InvalidParameter {
                name: "weight sum",
                value: sum,
            });
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    /// Uniform vector of length `n`.
    pub fn uniform(n: usize) -> Self {
        Self::new(vec![1.0 / n as f64; n]).expect("uniform is a valid simplex point")
    }

    /// `[1/k, .., 1/k, 0, .., 0]`: uniform over the first `k` of `n` slots.
    pub fn uniform_over(k: usize, n: usize) -> Self {
        assert!(k >= 1 && k <= n);
        let mut v = vec![0.0; n];
        for e in v.iter_mut().take(k) {
            *e = 1.0 / k as f64;
        }
        Self::new(v).expect("valid simplex point")
    }

    /// `[1, 0, .., 0]` of length `n`.
    pub fn point_mass(n: usize) -> Self {
        Self::uniform_over(1, n)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in construction order.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Entries sorted non-increasing.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Number of positive entries (the rank function NZ).
    pub fn nz(&self) -> usize {
        self.sorted.iter().filter(|&&e| e > 0.0).count()
    }

    /// Largest entry.
    pub fn max_entry(&self) -> f64 {
        self.sorted[0]
    }

    /// Smallest entry (zero when the vector is not fully supported).
    pub fn min_entry(&self) -> f64 {
        *self.sorted.last().unwrap()
    }

    /// Smallest positive entry.
    pub fn min_positive(&self) -> f64 {
        self.sorted[self.nz() - 1]
    }

    /// True when every entry is positive.
    pub fn full_support(&self) -> bool {
        self.min_entry() > 0.0
    }

    /// Copy extended with trailing zeros to length `len`.
    pub fn zero_pad(&self, len: usize) -> Self {
        assert!(len >= self.len());
        let mut entries = self.entries.clone();
        entries.resize(len, 0.0);
        let mut sorted = self.sorted.clone();
        sorted.resize(len, 0.0);
        Self { entries, sorted }
    }

    /// Kronecker product, sorted non-increasing.
    pub fn kron(&self, other: &ProbVector) -> ProbVector {
        let mut entries = Vec::with_capacity(self.len() * other.len());
        for &a in &self.entries {
            for &b in &other.entries {
                entries.push(a * b);
            }
        }
        let mut sorted = entries.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ProbVector { entries, sorted }
    }
}

/// Pad the shorter of two vectors with zeros so both share a length.
fn common_pad(p: &ProbVector, q: &ProbVector) -> (ProbVector, ProbVector) {
    let len = p.len().max(q.len());
    (p.zero_pad(len), q.zero_pad(len))
}

// ---------------------------------------------------------------------------
// Majorization order
// ---------------------------------------------------------------------------

/// True iff `p` is majorized by `q` (`p ≺ q`): every prefix sum of the
/// sorted entries of `p` is at most the corresponding prefix sum of `q`,
/// with slack [`TOL`]. Shorter vectors are zero-padded first.
pub fn majorizes(p: &ProbVector, q: &ProbVector) -> bool {
    let (p, q) = common_pad(p, q);
    let mut sp = 0.0;
    let mut sq = 0.0;
    for (a, b) in p.sorted().iter().zip(q.sorted()) {
        sp += a;
        sq += b;
        if sp > sq + TOL {
            return false;
        }
    }
    true
}

/// True iff `p ⊗ l ≺ q ⊗ l`.
pub fn kron_majorizes(p: &ProbVector, q: &ProbVector, l: &ProbVector) -> bool {
    let (p, q) = common_pad(p, q);
    majorizes(&p.kron(l), &q.kron(l))
}

// ---------------------------------------------------------------------------
// Schur functionals
// ---------------------------------------------------------------------------

/// Functionals monotone with respect to the majorization order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchurFunctional {
    /// Shannon entropy in nats, `-Σ p_i ln p_i` with `0 ln 0 = 0`.
    ShannonEntropy,
    /// Classical geometric mean `(Π p_i)^(1/len)`; zero entries make it 0.
    GeometricMean,
    /// Power mean of index alpha, normalized by the positive-entry count.
    PowerMean(f64),
    /// Power mean divided once more by the positive-entry count.
    NormalizedPowerMean(f64),
    /// Count of positive entries.
    NonZeroCount,
}

/// Evaluate a Schur functional on a probability vector.
///
/// The all-zero input (an empty window's sentinel) is unrepresentable here;
/// callers working with window metrics substitute 0 for both entropy and
/// the normalized power mean, see `classify::window_functionals`.
pub fn schur_eval(p: &ProbVector, which: SchurFunctional) -> f64 {
    match which {
        SchurFunctional::ShannonEntropy => shannon_entropy(p),
        SchurFunctional::GeometricMean => geometric_mean(p),
        SchurFunctional::PowerMean(alpha) => power_mean(p, alpha),
        SchurFunctional::NormalizedPowerMean(alpha) => normalized_power_mean(p, alpha),
        SchurFunctional::NonZeroCount => p.nz() as f64,
    }
}

/// Shannon entropy in nats with the `0 ln 0 = 0` convention.
pub fn shannon_entropy(p: &ProbVector) -> f64 {
    -p.entries()
        .iter()
        .filter(|&&e| e > 0.0)
        .map(|&e| e * e.ln())
        .sum::<f64>()
}

/// Geometric mean over all entries, `(Π p_i)^(1/len)`; 0 if any entry is 0.
pub fn geometric_mean(p: &ProbVector) -> f64 {
    if !p.full_support() {
        return 0.0;
    }
    let ln_sum: f64 = p.entries().iter().map(|e| e.ln()).sum();
    (ln_sum / p.len() as f64).exp()
}

/// Power mean `PM(p, alpha) = (Σ p_i^alpha / NZ(p))^(1/alpha)`.
///
/// For `alpha <= 0` the sum runs over the positive support; `alpha = 0`
/// returns the limit (support geometric mean) and `alpha = ±inf` the
/// largest / smallest positive entry.
pub fn power_mean(p: &ProbVector, alpha: f64) -> f64 {
    if alpha == f64::INFINITY {
        return p.max_entry();
    }
    if alpha == f64::NEG_INFINITY {
        return p.min_positive();
    }
    let nz = p.nz() as f64;
    if alpha == 0.0 {
        // lim_{alpha -> 0} PM = geometric mean over the support.
        let ln_sum: f64 = p
            .entries()
            .iter()
            .filter(|&&e| e > 0.0)
            .map(|&e| e.ln())
            .sum();
        return (ln_sum / nz).exp();
    }
    let sum: f64 = p
        .entries()
        .iter()
        .filter(|&&e| e > 0.0)
        .map(|&e| e.powf(alpha))
        .sum();
    (sum / nz).powf(1.0 / alpha)
}

/// `NPM(p, alpha) = PM(p, alpha) / NZ(p)`.
pub fn normalized_power_mean(p: &ProbVector, alpha: f64) -> f64 {
    power_mean(p, alpha) / p.nz() as f64
}

/// Unnormalized power sum `Σ p_i^alpha` over the positive support.
pub fn power_sum(p: &ProbVector, alpha: f64) -> f64 {
    p.entries()
        .iter()
        .filter(|&&e| e > 0.0)
        .map(|&e| e.powf(alpha))
        .sum()
}

/// Power mean under the continuous extension for `alpha <= 0`: any zero
/// entry sends `p_i^alpha` to infinity and the mean to 0.
pub fn extension_power_mean(p: &ProbVector, alpha: f64) -> f64 {
    debug_assert!(alpha <= 0.0);
    if p.full_support() {
        power_mean(p, alpha)
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Alpha grid
// ---------------------------------------------------------------------------

/// Grid of power-mean indices used for trumping checks and alpha scans.
///
/// `0.0` stands for the geometric-mean limit and the infinite endpoints for
/// the sorted-extreme limits.
#[derive(Debug, Clone)]
pub struct AlphaGrid {
    points: Vec<f64>,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self::new(vec![
            f64::NEG_INFINITY,
            -8.0,
            -4.0,
            -2.0,
            -1.0,
            -0.5,
            -0.1,
            0.0,
            0.1,
            0.5,
            0.9,
            1.0,
            1.1,
            1.5,
            2.0,
            3.0,
            4.0,
            8.0,
            16.0,
            f64::INFINITY,
        ])
    }
}

impl AlphaGrid {
    pub fn new(mut points: Vec<f64>) -> Self {
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();
        Self { points }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Finite and infinite grid points strictly above 1, descending.
    pub fn above_one_desc(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().rev().copied().filter(|&a| a > 1.0)
    }

    /// Finite and infinite grid points strictly below 1, ascending.
    pub fn below_one_asc(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().copied().filter(|&a| a < 1.0)
    }
}

// ---------------------------------------------------------------------------
// Trumping conditions
// ---------------------------------------------------------------------------

/// Outcome of a grid check of the trumping characterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrumpingVerdict {
    /// All three inequality families hold at every grid point. Grid checking
    /// yields necessary evidence, not proof.
    HoldsOnGrid,
    /// Some inequality fails on the grid, so `p` is not trumped by `q`.
    Fails,
    /// `p = q` or `p` lacks full support, outside the theorem's scope.
    PreconditionViolated,
}

/// Per-family results of the trumping check `p ≺_T q`.
#[derive(Debug, Clone, Copy)]
pub struct TrumpingReport {
    /// `PM(p, a) < PM(q, a)` for every grid point `a > 1` (inclusive at +inf).
    pub pm_gt1_ok: bool,
    /// `PM(p, a) > PM(q, a)` for every grid point `a < 1` (inclusive at -inf).
    pub pm_lt1_ok: bool,
    /// `SE(p) > SE(q)`.
    pub se_ok: bool,
    pub verdict: TrumpingVerdict,
}

fn strictly_less(a: f64, b: f64) -> bool {
    b - a > TOL
}

fn leq_with_tol(a: f64, b: f64) -> bool {
    a - b <= TOL
}

/// Check the power-mean inequality families of the trumping theorem.
///
/// Strict inequalities are required at finite grid points and inclusive ones
/// at the infinite endpoints (where the power means degenerate to sorted
/// extremes). Returns `(pm_gt1_ok, pm_lt1_ok)`.
fn pm_families_ok(p: &ProbVector, q: &ProbVector, grid: &AlphaGrid) -> (bool, bool) {
    let gt1 = grid.above_one_desc().all(|a| {
        if a.is_infinite() {
            leq_with_tol(power_mean(p, a), power_mean(q, a))
        } else {
            strictly_less(power_mean(p, a), power_mean(q, a))
        }
    });
    let lt1 = grid.below_one_asc().all(|a| {
        if a.is_infinite() {
            leq_with_tol(power_mean(q, a), power_mean(p, a))
        } else {
            strictly_less(power_mean(q, a), power_mean(p, a))
        }
    });
    (gt1, lt1)
}

/// Grid check of the trumping characterization of `p ≺_T q`.
///
/// The three flags are evaluated regardless of the preconditions; `verdict`
/// is `PreconditionViolated` when `p = q` (as sorted vectors) or `p` lacks
/// full support after zero-padding to the common length.
pub fn trumping_conditions(p: &ProbVector, q: &ProbVector, grid: &AlphaGrid) -> TrumpingReport {
    let (p, q) = common_pad(p, q);
    let (pm_gt1_ok, pm_lt1_ok) = pm_families_ok(&p, &q, grid);
    let se_ok = shannon_entropy(&p) > shannon_entropy(&q) + TOL;

    let equal_sorted = p
        .sorted()
        .iter()
        .zip(q.sorted())
        .all(|(a, b)| (a - b).abs() <= TOL);
    let verdict = if equal_sorted || !p.full_support() {
        TrumpingVerdict::PreconditionViolated
    } else if pm_gt1_ok && pm_lt1_ok && se_ok {
        TrumpingVerdict::HoldsOnGrid
    } else {
        TrumpingVerdict::Fails
    };
    TrumpingReport {
        pm_gt1_ok,
        pm_lt1_ok,
        se_ok,
        verdict,
    }
}

/// Cheap necessary condition for trumping: the sorted extremes must nest,
/// `max(p) <= max(q)` and `min(p) >= min(q)` (zeros included).
pub fn necessary_extremes(p: &ProbVector, q: &ProbVector) -> bool {
    let (p, q) = common_pad(p, q);
    leq_with_tol(p.max_entry(), q.max_entry()) && leq_with_tol(q.min_entry(), p.min_entry())
}

/// Sufficient condition for the power-mean families: the entrywise ratios
/// `q(i)/p(i)` over the sorted support of `q` are non-increasing.
///
/// Errors when `p` has a zero entry inside the sorted support of `q`.
pub fn ratio_ordered_check(p: &ProbVector, q: &ProbVector) -> Result<bool> {
    let (p, q) = common_pad(p, q);
    let k_star = q.nz();
    if p.nz() < k_star {
        return Err(Error::domain(
            "ratio check needs p positive across the sorted support of q",
        ));
    }
    let mut prev = f64::INFINITY;
    for i in 0..k_star {
        let ratio = q.sorted()[i] / p.sorted()[i];
        if ratio > prev + TOL {
            return Ok(false);
        }
        prev = prev.min(ratio);
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Alpha extremes
// ---------------------------------------------------------------------------

/// Outermost grid points at which the trumping inequalities fail, per
/// functional; exactly 1 when no grid point fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaExtremes {
    pub alpha_max_pm: f64,
    pub alpha_max_npm: f64,
    pub alpha_min_pm: f64,
    pub alpha_min_npm: f64,
}

fn eval_functional(v: &ProbVector, alpha: f64, normalized: bool) -> f64 {
    if normalized {
        normalized_power_mean(v, alpha)
    } else {
        power_mean(v, alpha)
    }
}

/// Largest grid alpha in `(1, inf)` where the desired ordering fails, after
/// permuting roles so the `alpha -> +inf` limit difference is `<= 0`.
fn alpha_max_for(p: &ProbVector, q: &ProbVector, grid: &AlphaGrid, normalized: bool) -> f64 {
    let (mut a, mut b) = (p, q);
    if eval_functional(a, f64::INFINITY, normalized) > eval_functional(b, f64::INFINITY, normalized)
    {
        std::mem::swap(&mut a, &mut b);
    }
    for alpha in grid.above_one_desc().filter(|a| a.is_finite()) {
        if eval_functional(a, alpha, normalized) > eval_functional(b, alpha, normalized) + TOL {
            return alpha;
        }
    }
    1.0
}

/// Smallest grid alpha in `(-inf, 1)` where the desired ordering fails, after
/// permuting roles so the `alpha -> -inf` limit difference is `>= 0`.
fn alpha_min_for(p: &ProbVector, q: &ProbVector, grid: &AlphaGrid, normalized: bool) -> f64 {
    let (mut a, mut b) = (p, q);
    if eval_functional(a, f64::NEG_INFINITY, normalized)
        < eval_functional(b, f64::NEG_INFINITY, normalized)
    {
        std::mem::swap(&mut a, &mut b);
    }
    for alpha in grid.below_one_asc().filter(|a| a.is_finite()) {
        if eval_functional(a, alpha, normalized) < eval_functional(b, alpha, normalized) - TOL {
            return alpha;
        }
    }
    1.0
}

/// Scan the grid for the outermost failures of the trumping inequalities,
/// separately for the power mean and the normalized power mean.
///
/// Each functional gets its own role permutation so that the limit at the
/// scanned end satisfies the desired ordering; the scan then walks toward 1
/// and reports the first failing grid point, or exactly 1 when none fails.
pub fn alpha_extremes(p: &ProbVector, q: &ProbVector, grid: &AlphaGrid) -> AlphaExtremes {
    let (p, q) = common_pad(p, q);
    AlphaExtremes {
        alpha_max_pm: alpha_max_for(&p, &q, grid, false),
        alpha_max_npm: alpha_max_for(&p, &q, grid, true),
        alpha_min_pm: alpha_min_for(&p, &q, grid, false),
        alpha_min_npm: alpha_min_for(&p, &q, grid, true),
    }
}
