//! Daily series container, validation, splitting, min-max scaling and the
//! sample autocorrelation function.

use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::math;
use crate::{Error, Result};

/// Default number of lags reported by the autocorrelation diagnostics.
pub const DEFAULT_MAX_LAG: usize = 20;

/// Largest accepted gap between a stored conversion and `100 * sales / clicks`.
pub const CONVERSION_TOLERANCE: f64 = 0.5;

/// Per-day exogenous counts aligned with a series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exog {
    pub clicks: Vec<u64>,
    pub sales: Vec<u64>,
}

impl Exog {
    pub fn len(&self) -> usize {
        self.clicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clicks.is_empty()
    }

    fn slice(&self, start: usize, end: usize) -> Exog {
        Exog {
            clicks: self.clicks[start..end].to_vec(),
            sales: self.sales[start..end].to_vec(),
        }
    }
}

/// Ordered daily conversion-rate observations (percent, 0 to 100).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    start_date: NaiveDate,
    exog: Option<Exog>,
}

impl TimeSeries {
    /// Builds a validated series: nonempty, finite and within `[0, 100]`.
    pub fn new(values: Vec<f64>, start_date: NaiveDate) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if !(0.0..=100.0).contains(&value) {
                return Err(Error::OutOfRange { index, value });
            }
        }
        Ok(Self {
            values,
            start_date,
            exog: None,
        })
    }

    /// Attaches clicks/sales columns; both must match the series length.
    pub fn with_exog(mut self, exog: Exog) -> Result<Self> {
        let expected = self.values.len();
        if exog.clicks.len() != expected {
            return Err(Error::ExogLength {
                column: "clicks",
                expected,
                found: exog.clicks.len(),
            });
        }
        if exog.sales.len() != expected {
            return Err(Error::ExogLength {
                column: "sales",
                expected,
                found: exog.sales.len(),
            });
        }
        self.exog = Some(exog);
        Ok(self)
    }

    /// Builds a series (with clicks/sales columns) from validated records.
    pub fn from_records(records: &[SiteRecord]) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptySeries)?;
        let values = records.iter().map(|r| r.conversion).collect();
        let exog = Exog {
            clicks: records.iter().map(|r| r.clicks).collect(),
            sales: records.iter().map(|r| r.sales).collect(),
        };
        Self::new(values, first.date)?.with_exog(exog)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn exog(&self) -> Option<&Exog> {
        self.exog.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample autocorrelation `r_0..=r_max_lag`, see [`acf`].
    pub fn acf(&self, max_lag: usize) -> Result<Vec<f64>> {
        acf(&self.values, max_lag)
    }

    /// Splits at `floor(n * train_fraction)`; exog columns split at the same index.
    pub fn split(&self, train_fraction: f64) -> Result<(TimeSeries, TimeSeries)> {
        let n = self.values.len();
        let degenerate = Error::DegenerateSplit {
            len: n,
            fraction: train_fraction,
        };
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(degenerate);
        }
        let cut = math::floor(n as f64 * train_fraction) as usize;
        if cut == 0 || cut >= n {
            return Err(degenerate);
        }
        self.split_at(cut).ok_or(degenerate)
    }

    /// Splits at an explicit index; `None` if either part would be empty.
    pub fn split_at(&self, cut: usize) -> Option<(TimeSeries, TimeSeries)> {
        let n = self.values.len();
        if cut == 0 || cut >= n {
            return None;
        }
        let head = TimeSeries {
            values: self.values[..cut].to_vec(),
            start_date: self.start_date,
            exog: self.exog.as_ref().map(|e| e.slice(0, cut)),
        };
        let tail_start = self
            .start_date
            .checked_add_days(Days::new(cut as u64))
            .unwrap_or(self.start_date);
        let tail = TimeSeries {
            values: self.values[cut..].to_vec(),
            start_date: tail_start,
            exog: self.exog.as_ref().map(|e| e.slice(cut, n)),
        };
        Some((head, tail))
    }
}

/// One day of store data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteRecord {
    pub date: NaiveDate,
    pub clicks: u64,
    pub sales: u64,
    /// Conversion rate in percent.
    pub conversion: f64,
    pub language: String,
    pub country: String,
}

impl SiteRecord {
    /// Checks `sales <= clicks` and that the conversion agrees with the counts.
    pub fn validate(&self) -> Result<()> {
        if self.sales > self.clicks {
            return Err(Error::SalesExceedClicks {
                clicks: self.clicks,
                sales: self.sales,
            });
        }
        if !self.conversion.is_finite() {
            return Err(Error::NonFinite { index: 0 });
        }
        let expected = conversion_rate(self.clicks, self.sales);
        let ok = if self.clicks == 0 {
            self.conversion == 0.0
        } else {
            (self.conversion - expected).abs() <= CONVERSION_TOLERANCE
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ConversionMismatch {
                conversion: self.conversion,
                expected,
            })
        }
    }
}

/// `100 * sales / clicks`, or 0 on a day without clicks.
pub fn conversion_rate(clicks: u64, sales: u64) -> f64 {
    if clicks == 0 {
        0.0
    } else {
        100.0 * sales as f64 / clicks as f64
    }
}

/// Biased sample autocorrelation `r_0..=r_max_lag`.
///
/// `r_k = sum_{t<n-k} (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2`, so
/// `r_0 = 1` and `|r_k| <= 1`.
pub fn acf(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if max_lag >= n {
        return Err(Error::LagTooLarge { max_lag, len: n });
    }
    let mean = math::mean(values);
    let dev: Vec<f64> = values.iter().map(|x| x - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 || values.iter().all(|&x| x == values[0]) {
        return Err(Error::ZeroVariance);
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for k in 1..=max_lag {
        let num: f64 = dev[..n - k].iter().zip(&dev[k..]).map(|(a, b)| a * b).sum();
        out.push(num / denom);
    }
    Ok(out)
}

/// The `±2/sqrt(n)` band used to call a lag "uncorrelated".
pub fn whiteness_band(n: usize) -> f64 {
    2.0 / math::sqrt(n as f64)
}

/// Fraction of lags `1..=max_lag` whose autocorrelation lies inside
/// [`whiteness_band`].
pub fn whiteness_fraction(values: &[f64], max_lag: usize) -> Result<f64> {
    let r = acf(values, max_lag)?;
    if max_lag == 0 {
        return Ok(1.0);
    }
    let band = whiteness_band(values.len());
    let inside = r[1..].iter().filter(|rk| rk.abs() <= band).count();
    Ok(inside as f64 / max_lag as f64)
}

/// Min-max scaling parameters fitted on a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizerParams {
    pub min: f64,
    pub max: f64,
}

impl NormalizerParams {
    /// A normalizer whose window was constant.
    pub fn is_degenerate(&self) -> bool {
        self.max == self.min
    }

    /// `(x - min) / (max - min)`; a degenerate normalizer maps everything to 0.5.
    pub fn normalize(&self, x: f64) -> f64 {
        if self.is_degenerate() {
            0.5
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    /// Inverse of [`normalize`](Self::normalize). A degenerate normalizer
    /// returns the window's constant value.
    pub fn denormalize(&self, y: f64) -> f64 {
        if self.is_degenerate() {
            self.min
        } else {
            y * (self.max - self.min) + self.min
        }
    }
}

/// Fits min-max parameters on a nonempty window.
pub fn fit_normalizer(window: &[f64]) -> Result<NormalizerParams> {
    let first = *window.first().ok_or(Error::EmptyWindow)?;
    let (min, max) = window
        .iter()
        .fold((first, first), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(NormalizerParams { min, max })
}
