//! Hurdle-based geometric emission distribution and derived window densities.
//!
//! A day is active with probability `gamma`; an active day's count follows a
//! geometric body with continuation probability `mu`:
//!
//! ```text
//! P(M = 0) = 1 - gamma,      P(M = r) = gamma (1 - mu) mu^(r-1),  r >= 1.
//! ```
//!
//! For a window of `delta` i.i.d. days the module also provides the exact
//! joint density of `(X, Y)` (active days, total count), the binomial
//! marginal of `X`, and the marginal of `Y` as a finite sum evaluated in
//! log-space. These are the per-window likelihoods of the window-mode HMMs.

use std::cell::RefCell;

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Emission parameters of one state: `gamma` in `[0, 1]`, `mu` in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HbgParams {
    pub gamma: f64,
    pub mu: f64,
}

impl HbgParams {
    pub fn new(gamma: f64, mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) || !gamma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
            });
        }
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: mu,
            });
        }
        Ok(Self { gamma, mu })
    }

    /// Mean daily count `gamma / (1 - mu)`.
    pub fn mean(&self) -> f64 {
        self.gamma / (1.0 - self.mu)
    }
}

// ---------------------------------------------------------------------------
// Log-binomial machinery
// ---------------------------------------------------------------------------

thread_local! {
    // Cumulative ln-factorial table, grown on demand.
    static LN_FACT: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

fn ln_factorial(n: u64) -> f64 {
    let n = n as usize;
    LN_FACT.with(|cell| {
        let mut table = cell.borrow_mut();
        if table.is_empty() {
            table.push(0.0);
        }
        while table.len() <= n {
            let i = table.len() as f64;
            let last = *table.last().unwrap();
            table.push(last + i.ln());
        }
        table[n]
    })
}

/// `ln C(n, k)`; negative infinity outside the triangle.
pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + terms.iter().map(|&t| (t - max).exp()).sum::<f64>().ln()
}

/// `e * ln(b)` with the `0 * ln(0) = 0` convention for zero exponents.
fn xlny(e: f64, b: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        e * b.ln()
    }
}

// ---------------------------------------------------------------------------
// Daily pmf and sampling
// ---------------------------------------------------------------------------

/// Daily count pmf.
pub fn hbg_pmf(params: HbgParams, r: u64) -> f64 {
    hbg_ln_pmf(params, r).exp()
}

/// Daily count log-pmf.
pub fn hbg_ln_pmf(params: HbgParams, r: u64) -> f64 {
    let HbgParams { gamma, mu } = params;
    if r == 0 {
        (1.0 - gamma).ln()
    } else {
        gamma.ln() + (1.0 - mu).ln() + xlny((r - 1) as f64, mu)
    }
}

/// Draw one daily count by inverse-CDF sampling.
pub fn hbg_sample<R: rand::Rng>(params: HbgParams, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    if u >= params.gamma {
        return 0;
    }
    if params.mu == 0.0 {
        return 1;
    }
    let v: f64 = rng.random();
    // Geometric number of continuations beyond the first event.
    1 + ((1.0 - v).ln() / params.mu.ln()).floor() as u64
}

// ---------------------------------------------------------------------------
// Window densities
// ---------------------------------------------------------------------------

/// Joint pmf of `(X, Y)` over a `delta`-day window.
pub fn joint_xy_pmf(params: HbgParams, delta: usize, k: u32, r: u64) -> Result<f64> {
    joint_xy_ln_pmf(params, delta, k, r).map(f64::exp)
}

/// Joint log-pmf of `(X, Y)`:
/// `C(delta,k) C(r-1,r-k) (1-gamma)^(delta-k) gamma^k (1-mu)^k mu^(r-k)`.
pub fn joint_xy_ln_pmf(params: HbgParams, delta: usize, k: u32, r: u64) -> Result<f64> {
    let HbgParams { gamma, mu } = params;
    if usize::try_from(k).unwrap() > delta {
        return Err(Error::domain(format!("x = {k} exceeds window length {delta}")));
    }
    if r < u64::from(k) {
        return Err(Error::domain(format!("y = {r} smaller than x = {k}")));
    }
    let d = delta as f64;
    let kf = f64::from(k);
    if k == 0 {
        // No active day: Y must be zero too.
        return Ok(if r == 0 { d * (1.0 - gamma).ln() } else { f64::NEG_INFINITY });
    }
    if gamma == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let ln = ln_binomial(delta as u64, u64::from(k))
        + ln_binomial(r - 1, r - u64::from(k))
        + xlny(d - kf, 1.0 - gamma)
        + kf * gamma.ln()
        + kf * (1.0 - mu).ln()
        + xlny((r - u64::from(k)) as f64, mu);
    Ok(ln)
}

/// Binomial pmf of `X` (active days): `Bin(delta, gamma)` at `k`.
pub fn x_pmf(params: HbgParams, delta: usize, k: u32) -> f64 {
    x_ln_pmf(params, delta, k).exp()
}

/// Binomial log-pmf of `X`.
pub fn x_ln_pmf(params: HbgParams, delta: usize, k: u32) -> f64 {
    if usize::try_from(k).unwrap() > delta {
        return f64::NEG_INFINITY;
    }
    let d = delta as f64;
    let kf = f64::from(k);
    ln_binomial(delta as u64, u64::from(k)) + xlny(kf, params.gamma) + xlny(d - kf, 1.0 - params.gamma)
}

/// Marginal pmf of `Y` (window total).
pub fn y_pmf(params: HbgParams, delta: usize, r: u64) -> f64 {
    y_ln_pmf(params, delta, r).exp()
}

/// Marginal log-pmf of `Y`, evaluated as the exact finite sum
/// `(1-gamma)^delta mu^r Σ_{k=1}^{min(r,delta)} C(delta,k) C(r-1,r-k) A^k`
/// with `A = ((1-mu) gamma) / ((1-gamma) mu)`, plus `P(Y=0) = (1-gamma)^delta`.
///
/// Degenerate parameters route to closed forms: `mu = 0` collapses `Y` to
/// `X`, and `gamma = 1` pins `X = delta` (negative-binomial total).
pub fn y_ln_pmf(params: HbgParams, delta: usize, r: u64) -> f64 {
    let HbgParams { gamma, mu } = params;
    let d = delta as f64;
    if r == 0 {
        return d * (1.0 - gamma).ln();
    }
    if gamma == 0.0 {
        return f64::NEG_INFINITY;
    }
    if mu == 0.0 {
        // Every active day contributes exactly one event.
        return if r <= delta as u64 {
            x_ln_pmf(params, delta, r as u32)
        } else {
            f64::NEG_INFINITY
        };
    }
    if gamma == 1.0 {
        // All days active: Y - delta extra events spread over delta days.
        return if r >= delta as u64 {
            ln_binomial(r - 1, r - delta as u64)
                + d * (1.0 - mu).ln()
                + xlny((r - delta as u64) as f64, mu)
        } else {
            f64::NEG_INFINITY
        };
    }
    let ln_a = (1.0 - mu).ln() + gamma.ln() - (1.0 - gamma).ln() - mu.ln();
    let k_max = (delta as u64).min(r);
    let terms: Vec<f64> = (1..=k_max)
        .map(|k| ln_binomial(delta as u64, k) + ln_binomial(r - 1, r - k) + k as f64 * ln_a)
        .collect();
    d * (1.0 - gamma).ln() + r as f64 * mu.ln() + log_sum_exp(&terms)
}

/// Smallest cutoff `R` such that the `Y` tail mass beyond `R` is below `eps`,
/// from the geometric ratio bound `pmf(r+1)/pmf(r) <= mu r / (r - delta + 1)`.
pub fn y_tail_cutoff(params: HbgParams, delta: usize, eps: f64) -> u64 {
    let mu = params.mu;
    if mu == 0.0 || params.gamma == 0.0 {
        return delta as u64;
    }
    let q = (1.0 + mu) / 2.0;
    let r0 = (q * (delta as f64 - 1.0) / (q - mu)).ceil().max(delta as f64) as u64;
    let mut r = r0;
    loop {
        let tail_bound = y_pmf(params, delta, r) * q / (1.0 - q);
        if tail_bound < eps {
            return r;
        }
        r += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    const P: HbgParams = HbgParams { gamma: 0.1, mu: 0.3 };

    #[test]
    fn daily_pmf_values() {
        assert!((hbg_pmf(P, 0) - 0.9).abs() < 1e-15);
        assert!((hbg_pmf(P, 1) - 0.07).abs() < 1e-15);
        // gamma (1-mu) mu^2 = 0.1 * 0.7 * 0.09
        assert!((hbg_pmf(P, 3) - 0.0063).abs() < 1e-15);
    }

    #[test]
    fn daily_pmf_normalizes() {
        // Tail after R is exactly gamma * mu^R.
        let r_max = 64;
        let total: f64 = (0..=r_max).map(|r| hbg_pmf(P, r)).sum();
        assert!((1.0 - total) < 1e-12 + P.gamma * P.mu.powi(r_max as i32));
        assert!((1.0 - total).abs() < 1e-12);
    }

    #[test]
    fn degenerate_sampling() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let off = HbgParams::new(0.0, 0.5).unwrap();
        assert!((0..100).all(|_| hbg_sample(off, &mut rng) == 0));
        let on = HbgParams::new(1.0, 0.0).unwrap();
        assert!((0..100).all(|_| hbg_sample(on, &mut rng) == 1));
    }

    #[test]
    fn sample_mean_matches_formula() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 1_000_000u64;
        let total: u64 = (0..n).map(|_| hbg_sample(P, &mut rng)).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - P.mean()).abs() < 0.002, "mean {mean} vs {}", P.mean());
    }

    #[test]
    fn joint_pmf_values() {
        assert!((joint_xy_pmf(P, 7, 0, 0).unwrap() - 0.9f64.powi(7)).abs() < 1e-15);
        // 7 * 0.9^6 * 0.1 * 0.7
        let expected = 7.0 * 0.9f64.powi(6) * 0.1 * 0.7;
        assert!((joint_xy_pmf(P, 7, 1, 1).unwrap() - expected).abs() < 1e-12);
        assert!(joint_xy_pmf(P, 7, 3, 2).is_err());
    }

    #[test]
    fn joint_pmf_normalizes() {
        let params = HbgParams::new(0.2, 0.4).unwrap();
        let r_max = y_tail_cutoff(params, 7, 1e-13);
        let mut total = 0.0;
        for r in 0..=r_max {
            for k in 0..=7u32.min(r as u32) {
                total += joint_xy_pmf(params, 7, k, r).unwrap();
            }
        }
        assert!((total - 1.0).abs() < 1e-12, "total {total}");
    }

    #[test]
    fn x_pmf_values_and_normalization() {
        assert!((x_pmf(P, 7, 0) - 0.9f64.powi(7)).abs() < 1e-15);
        assert!((x_pmf(P, 7, 7) - 1e-7).abs() < 1e-18);
        let total: f64 = (0..=7).map(|k| x_pmf(P, 7, k)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // mu plays no role in X.
        let other = HbgParams::new(0.1, 0.9).unwrap();
        for k in 0..=7 {
            assert_eq!(x_pmf(P, 7, k), x_pmf(other, 7, k));
        }
    }

    #[test]
    fn y_pmf_matches_marginalized_joint() {
        let params = HbgParams::new(0.2, 0.4).unwrap();
        for r in 0..=30u64 {
            let marginal: f64 = (0..=7u32.min(r as u32))
                .map(|k| joint_xy_pmf(params, 7, k, r).unwrap())
                .sum();
            assert!(
                (y_pmf(params, 7, r) - marginal).abs() < 1e-12,
                "r = {r}: {} vs {marginal}",
                y_pmf(params, 7, r)
            );
        }
    }

    #[test]
    fn y_pmf_normalizes_with_tail_bound() {
        let params = HbgParams::new(0.2, 0.4).unwrap();
        let r_max = y_tail_cutoff(params, 7, 1e-10);
        let total: f64 = (0..=r_max).map(|r| y_pmf(params, 7, r)).sum();
        assert!(1.0 - total < 1e-9, "total {total}");
        assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn y_pmf_degenerate_mu_zero() {
        let params = HbgParams::new(0.3, 0.0).unwrap();
        assert!((y_pmf(params, 7, 0) - 0.7f64.powi(7)).abs() < 1e-15);
        for r in 0..=7u64 {
            assert!((y_pmf(params, 7, r) - x_pmf(params, 7, r as u32)).abs() < 1e-15);
        }
        assert_eq!(y_pmf(params, 7, 8), 0.0);
    }

    #[test]
    fn y_pmf_degenerate_gamma_one() {
        let params = HbgParams::new(1.0, 0.3).unwrap();
        assert_eq!(y_pmf(params, 7, 6), 0.0);
        let total: f64 = (7..=120).map(|r| y_pmf(params, 7, r)).sum();
        assert!((total - 1.0).abs() < 1e-9);
        for r in 7..=20u64 {
            let joint = joint_xy_pmf(params, 7, 7, r).unwrap();
            assert!((y_pmf(params, 7, r) - joint).abs() < 1e-13);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn monte_carlo_window_histogram_matches_joint_pmf() {
        let params = HbgParams::new(0.15, 0.35).unwrap();
        let delta = 7usize;
        let n_windows = 1_000_000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        let r_cap = 40usize;
        let mut hist = vec![vec![0u64; r_cap + 1]; delta + 1];
        for _ in 0..n_windows {
            let mut x = 0u32;
            let mut y = 0u64;
            for _ in 0..delta {
                let m = hbg_sample(params, &mut rng);
                if m > 0 {
                    x += 1;
                }
                y += m;
            }
            if (y as usize) <= r_cap {
                hist[x as usize][y as usize] += 1;
            }
        }
        let n = n_windows as f64;
        for k in 0..=delta {
            for r in k..=r_cap {
                let p = joint_xy_pmf(params, delta, k as u32, r as u64).unwrap();
                let expected = n * p;
                if expected < 25.0 {
                    continue;
                }
                let se = (n * p * (1.0 - p)).sqrt();
                let observed = hist[k][r] as f64;
                assert!(
                    (observed - expected).abs() <= 4.0 * se,
                    "cell ({k},{r}): observed {observed}, expected {expected}, se {se}"
                );
            }
        }
    }
}
