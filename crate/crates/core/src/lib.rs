//! Forecasting primitives for weakly correlated, zero-inflated daily series.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical
//! piece of the toolkit: the series container and autocorrelation, the four
//! error measures, simple exponential smoothing, a CART regression tree, a
//! single-layer LSTM trained by backpropagation through time, the AIC gate
//! over low-order ARMA candidates, the rolling-window backtester and a
//! seeded generator of synthetic conversion-rate data.
//!
//! File formats, configuration and the command line live in the
//! `sparsecast` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arma;
pub mod backtest;
pub mod datagen;
mod error;
pub mod lstm;
mod math;
pub mod metrics;
pub mod series;
pub mod smoothing;
pub mod tree;

pub use error::{Error, Result};
pub use metrics::ErrorTable;
pub use series::{Exog, NormalizerParams, SiteRecord, TimeSeries};
