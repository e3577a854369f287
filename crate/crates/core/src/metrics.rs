//! Forecast error measures: mean absolute deviation, mean (signed)
//! deviation, mean squared error and mean absolute percentage error.
//!
//! Errors are taken as `actual - forecast`, so a positive [`md`] means the
//! forecasts undershoot. [`mape`] is reported as a fraction and skips days
//! whose actual value is zero.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn check(actual: &[f64], forecast: &[f64]) -> Result<()> {
    if actual.len() != forecast.len() {
        return Err(Error::LengthMismatch {
            actual: actual.len(),
            forecast: forecast.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

fn mean_of(actual: &[f64], forecast: &[f64], f: impl Fn(f64) -> f64) -> Result<f64> {
    check(actual, forecast)?;
    let sum: f64 = actual.iter().zip(forecast).map(|(a, p)| f(a - p)).sum();
    Ok(sum / actual.len() as f64)
}

/// Mean absolute deviation.
pub fn mad(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    mean_of(actual, forecast, f64::abs)
}

/// Mean signed deviation.
pub fn md(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    mean_of(actual, forecast, |e| e)
}

/// Mean squared error.
pub fn mse(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    mean_of(actual, forecast, |e| e * e)
}

/// Mean absolute percentage error as a fraction, together with the number
/// of terms that entered the average (days with a zero actual are skipped).
pub fn mape(actual: &[f64], forecast: &[f64]) -> Result<(f64, usize)> {
    check(actual, forecast)?;
    let (sum, used) = actual
        .iter()
        .zip(forecast)
        .filter(|(a, _)| **a != 0.0)
        .fold((0.0, 0usize), |(s, n), (a, f)| {
            (s + ((a - f) / a).abs(), n + 1)
        });
    if used == 0 {
        return Err(Error::AllActualsZero);
    }
    Ok((sum / used as f64, used))
}

/// The four error measures for one forecast trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub mad: f64,
    pub md: f64,
    pub mse: f64,
    /// `None` when every actual is zero.
    pub mape: Option<f64>,
    pub n_used_mape: usize,
}

impl ErrorTable {
    pub fn compute(actual: &[f64], forecast: &[f64]) -> Result<Self> {
        let (mape, n_used_mape) = match mape(actual, forecast) {
            Ok((m, n)) => (Some(m), n),
            Err(Error::AllActualsZero) => (None, 0),
            Err(e) => return Err(e),
        };
        Ok(Self {
            mad: mad(actual, forecast)?,
            md: md(actual, forecast)?,
            mse: mse(actual, forecast)?,
            mape,
            n_used_mape,
        })
    }

    /// Largest absolute difference between two tables' fields.
    pub fn max_abs_diff(&self, other: &ErrorTable) -> f64 {
        let mape = match (self.mape, other.mape) {
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        [
            (self.mad - other.mad).abs(),
            (self.md - other.md).abs(),
            (self.mse - other.mse).abs(),
            mape,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}
