//! Daily count series and their per-window attack metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorize::ProbVector;

/// Immutable daily count series with a window length.
///
/// Days beyond the last complete window are ignored everywhere: with `N`
/// days and window length `delta` there are exactly `floor(N / delta)`
/// windows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityProfile {
    counts: Vec<u32>,
    delta: usize,
}

impl ActivityProfile {
    /// Build a profile; requires `delta > 1` and at least one full window.
    pub fn new(counts: Vec<u32>, delta: usize) -> Result<Self> {
        if delta < 2 {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta as f64,
            });
        }
        if counts.len() < delta {
            return Err(Error::LengthMismatch {
                left: counts.len(),
                right: delta,
            });
        }
        Ok(Self { counts, delta })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn n_days(&self) -> usize {
        self.counts.len()
    }

    /// Number of complete windows `K = floor(N / delta)`.
    pub fn num_windows(&self) -> usize {
        self.counts.len() / self.delta
    }

    /// Days belonging to window `n` (1-based).
    pub fn window_days(&self, n: usize) -> Result<&[u32]> {
        let k = self.num_windows();
        if n < 1 || n > k {
            return Err(Error::WindowOutOfRange { index: n, count: k });
        }
        let start = (n - 1) * self.delta;
        Ok(&self.counts[start..start + self.delta])
    }

    /// Attack metrics of window `n` (1-based).
    pub fn window_metrics(&self, n: usize) -> Result<WindowMetrics> {
        let days = self.window_days(n)?;
        Ok(WindowMetrics::from_days(days))
    }

    /// Attack metrics of every complete window, in order.
    pub fn all_windows(&self) -> Vec<WindowMetrics> {
        (1..=self.num_windows())
            .map(|n| self.window_metrics(n).expect("index in range"))
            .collect()
    }
}

/// Per-window attack metrics: active days `x`, total count `y`, and the
/// attack frequency vector (all zeros when the window is empty).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub x: u32,
    pub y: u64,
    /// `count_i / y` per day of the window; the all-zero sentinel when `y = 0`.
    pub freq: Vec<f64>,
}

impl WindowMetrics {
    pub fn from_days(days: &[u32]) -> Self {
        let x = days.iter().filter(|&&m| m > 0).count() as u32;
        let y: u64 = days.iter().map(|&m| u64::from(m)).sum();
        let freq = if y == 0 {
            vec![0.0; days.len()]
        } else {
            days.iter().map(|&m| f64::from(m) / y as f64).collect()
        };
        Self { x, y, freq }
    }

    /// The attack frequency vector as a probability vector; `None` for an
    /// empty window (callers substitute the zero sentinel for functionals).
    pub fn freq_vector(&self) -> Option<ProbVector> {
        if self.y == 0 {
            None
        } else {
            Some(ProbVector::new(self.freq.clone()).expect("frequency vector sums to one"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn metrics_of_mixed_window() {
        let profile = ActivityProfile::new(vec![0, 2, 0, 1, 0, 0, 3], 7).unwrap();
        let m = profile.window_metrics(1).unwrap();
        assert_eq!(m.x, 3);
        assert_eq!(m.y, 6);
        let expected = [0.0, 1.0 / 3.0, 0.0, 1.0 / 6.0, 0.0, 0.0, 0.5];
        for (a, b) in m.freq.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn metrics_of_empty_window() {
        let profile = ActivityProfile::new(vec![0; 7], 7).unwrap();
        let m = profile.window_metrics(1).unwrap();
        assert_eq!((m.x, m.y), (0, 0));
        assert!(m.freq.iter().all(|&f| f == 0.0));
        assert!(m.freq_vector().is_none());
    }

    #[test]
    fn metrics_of_uniform_window() {
        let profile = ActivityProfile::new(vec![1; 7], 7).unwrap();
        let m = profile.window_metrics(1).unwrap();
        assert_eq!((m.x, m.y), (7, 7));
        for &f in &m.freq {
            assert!((f - 1.0 / 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trailing_partial_window_is_dropped() {
        assert_eq!(
            ActivityProfile::new(vec![1; 14], 7).unwrap().num_windows(),
            2
        );
        assert_eq!(
            ActivityProfile::new(vec![1; 15], 7).unwrap().num_windows(),
            2
        );
        assert_eq!(
            ActivityProfile::new(vec![1; 7], 7).unwrap().num_windows(),
            1
        );
    }

    #[test]
    fn out_of_range_window_errors() {
        let profile = ActivityProfile::new(vec![1; 14], 7).unwrap();
        assert!(profile.window_metrics(0).is_err());
        assert!(profile.window_metrics(3).is_err());
    }

    #[test]
    fn too_short_series_rejected() {
        assert!(ActivityProfile::new(vec![1; 6], 7).is_err());
        assert!(ActivityProfile::new(vec![1; 7], 1).is_err());
    }

    proptest! {
        #[test]
        fn window_invariants(counts in prop::collection::vec(0u32..6, 7..40)) {
            let profile = ActivityProfile::new(counts.clone(), 7).unwrap();
            let windows = profile.all_windows();
            prop_assert_eq!(windows.len(), counts.len() / 7);

            let mut y_total = 0u64;
            for (n, m) in windows.iter().enumerate() {
                prop_assert!(u64::from(m.x) <= m.y);
                prop_assert!(m.x <= 7);
                prop_assert_eq!(m.x == 0, m.y == 0);
                y_total += m.y;
                // Frequencies restore the counts exactly.
                let days = profile.window_days(n + 1).unwrap();
                for (f, &c) in m.freq.iter().zip(days) {
                    prop_assert!((f * m.y as f64 - f64::from(c)).abs() < 1e-9);
                }
            }
            let covered: u64 = counts[..windows.len() * 7].iter().map(|&c| u64::from(c)).sum();
            prop_assert_eq!(y_total, covered);
        }
    }
}
