//! Simple exponential smoothing.
//!
//! The smoothed value doubles as the one-step forecast:
//! `s[0] = z[0]` and `s[t] = alpha * z[t-1] + (1 - alpha) * s[t-1]`, so
//! `s[t]` is the forecast of `z[t]` made before `z[t]` is seen.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `{0.05, 0.10, ..., 0.95}`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// One smoothing update. Clamped to the segment between `s` and `z`, which
/// the convex combination can overshoot by an ulp.
fn step(s: f64, z: f64, alpha: f64) -> f64 {
    (alpha * z + (1.0 - alpha) * s).clamp(s.min(z), s.max(z))
}

/// Smoothed series aligned with the input; `alpha` may be 1 (naive limit).
pub fn es_smooth(series: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let (&first, _) = series.split_first().ok_or(Error::EmptySeries)?;
    let mut out = Vec::with_capacity(series.len());
    out.push(first);
    let mut s = first;
    for &z in &series[..series.len() - 1] {
        s = step(s, z, alpha);
        out.push(s);
    }
    Ok(out)
}

/// Residuals `z[t] - s[t]`.
pub fn es_residuals(series: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let smoothed = es_smooth(series, alpha)?;
    Ok(series.iter().zip(&smoothed).map(|(z, s)| z - s).collect())
}

/// In-sample one-step MSE over `t = 1..n` (the first point is the initial
/// condition and is not scored).
pub fn in_sample_mse(series: &[f64], alpha: f64) -> Result<f64> {
    let smoothed = es_smooth(series, alpha)?;
    let n = series.len() - 1;
    if n == 0 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            found: 1,
        });
    }
    let sse: f64 = series[1..]
        .iter()
        .zip(&smoothed[1..])
        .map(|(z, s)| (z - s) * (z - s))
        .sum();
    Ok(sse / n as f64)
}

/// Picks the grid value with the smallest in-sample one-step MSE. Ties go
/// to the smallest alpha.
pub fn es_select_alpha(train: &[f64], grid: &[f64]) -> Result<(f64, f64)> {
    if train.len() < 3 {
        return Err(Error::SeriesTooShort {
            needed: 3,
            found: train.len(),
        });
    }
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(&bad) = grid.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
        return Err(Error::AlphaOutOfRange(bad));
    }
    let mut best: Option<(f64, f64)> = None;
    for &alpha in grid {
        let mse = in_sample_mse(train, alpha)?;
        best = match best {
            Some((ba, bm)) if bm < mse || (bm == mse && ba <= alpha) => Some((ba, bm)),
            _ => Some((alpha, mse)),
        };
    }
    Ok(best.expect("grid is nonempty"))
}

/// Exponential smoothing state advanced one observation at a time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsModel {
    alpha: f64,
    last_smoothed: f64,
    initialized: bool,
}

impl EsModel {
    /// `alpha` in `(0, 1]`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        Ok(Self {
            alpha,
            last_smoothed: 0.0,
            initialized: false,
        })
    }

    /// Starts from a known smoothed value.
    pub fn with_state(alpha: f64, last_smoothed: f64) -> Result<Self> {
        let mut model = Self::new(alpha)?;
        model.last_smoothed = last_smoothed;
        model.initialized = true;
        Ok(model)
    }

    /// Runs the recurrence over `history`; the state ends at the smoothed
    /// value aligned with the last observation.
    pub fn fit(alpha: f64, history: &[f64]) -> Result<Self> {
        let smoothed = es_smooth(history, alpha)?;
        Self::with_state(
            alpha,
            *smoothed.last().expect("es_smooth output is nonempty"),
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn last_smoothed(&self) -> Option<f64> {
        self.initialized.then_some(self.last_smoothed)
    }

    /// Folds in `last_observation` and returns the forecast for the next day.
    pub fn forecast_next(&mut self, last_observation: f64) -> Result<f64> {
        if !self.initialized {
            return Err(Error::Uninitialized);
        }
        self.last_smoothed = step(self.last_smoothed, last_observation, self.alpha);
        Ok(self.last_smoothed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn alpha_one_is_naive() {
        let z = [3.0, 7.0, 1.0, 4.0];
        assert_eq!(es_smooth(&z, 1.0).unwrap(), vec![3.0, 3.0, 7.0, 1.0]);
    }

    #[test]
    fn constant_is_fixed_point() {
        for alpha in default_alpha_grid() {
            assert!(es_smooth(&[2.5; 6], alpha)
                .unwrap()
                .iter()
                .all(|&s| s == 2.5));
        }
    }

    #[test]
    fn two_point_recurrence() {
        let s = es_smooth(&[0.0, 10.0], 0.3).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        let mut model = EsModel::fit(0.3, &[0.0, 10.0]).unwrap();
        assert_abs_diff_eq!(model.forecast_next(10.0).unwrap(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn forecast_next_examples() {
        let mut m = EsModel::with_state(0.5, 4.0).unwrap();
        assert_eq!(m.forecast_next(8.0).unwrap(), 6.0);
        assert_eq!(m.last_smoothed(), Some(6.0));

        let mut m = EsModel::with_state(1.0, 4.0).unwrap();
        assert_eq!(m.forecast_next(8.0).unwrap(), 8.0);

        let mut m = EsModel::with_state(0.3, 5.0).unwrap();
        assert_eq!(m.forecast_next(5.0).unwrap(), 5.0);

        let mut fresh = EsModel::new(0.3).unwrap();
        assert_eq!(fresh.forecast_next(1.0), Err(Error::Uninitialized));
    }

    #[test]
    fn smoothing_errors() {
        assert_eq!(es_smooth(&[], 0.5), Err(Error::EmptySeries));
        assert_eq!(es_smooth(&[1.0], 0.0), Err(Error::AlphaOutOfRange(0.0)));
        assert_eq!(es_smooth(&[1.0], 1.5), Err(Error::AlphaOutOfRange(1.5)));
        assert!(matches!(
            es_select_alpha(&[1.0, 2.0], &default_alpha_grid()),
            Err(Error::SeriesTooShort { .. })
        ));
        assert_eq!(
            es_select_alpha(&[1.0, 2.0, 3.0], &[]),
            Err(Error::EmptyGrid)
        );
        assert_eq!(
            es_select_alpha(&[1.0, 2.0, 3.0], &[0.5, 1.0]),
            Err(Error::AlphaOutOfRange(1.0))
        );
    }

    #[test]
    fn constant_series_selects_smallest_alpha() {
        let (alpha, mse) = es_select_alpha(&[4.0; 10], &[0.3, 0.1, 0.7]).unwrap();
        assert_eq!((alpha, mse), (0.1, 0.0));
    }

    #[test]
    fn alternating_series_prefers_small_alpha() {
        let z: Vec<f64> = (0..30)
            .map(|t| if t % 2 == 0 { 0.0 } else { 10.0 })
            .collect();
        let grid = default_alpha_grid();
        // independent recurrence loop
        let brute = |alpha: f64| {
            let mut s = z[0];
            let mut sse = 0.0;
            for t in 1..z.len() {
                s = alpha * z[t - 1] + (1.0 - alpha) * s;
                sse += (z[t] - s).powi(2);
            }
            sse / (z.len() - 1) as f64
        };
        let mut best = (grid[0], brute(grid[0]));
        for &a in &grid[1..] {
            if brute(a) < best.1 {
                best = (a, brute(a));
            }
        }
        let (alpha, mse) = es_select_alpha(&z, &grid).unwrap();
        assert_eq!(alpha, best.0);
        assert!((mse - best.1).abs() < 1e-12);
        assert!(alpha < 0.5);
        assert!(brute(0.95) > 2.0 * mse);
    }

    fn series() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-100.0f64..100.0, 1..60)
    }

    proptest! {
        #[test]
        fn bounded_by_series_range(z in series(), alpha in 0.01f64..=1.0) {
            let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for s in es_smooth(&z, alpha).unwrap() {
                prop_assert!(s >= lo - 1e-12 && s <= hi + 1e-12);
            }
        }

        #[test]
        fn affine_equivariance(z in series(), alpha in 0.01f64..1.0, a in -5.0f64..5.0, b in -50.0f64..50.0) {
            let mapped: Vec<f64> = z.iter().map(|x| a * x + b).collect();
            let lhs = es_smooth(&mapped, alpha).unwrap();
            let rhs = es_smooth(&z, alpha).unwrap();
            for (l, r) in lhs.iter().zip(&rhs) {
                prop_assert!((l - (a * r + b)).abs() < 1e-12 * (1.0 + a.abs() * 100.0 + b.abs()));
            }
        }
    }
}
