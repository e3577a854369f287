//! Rolling-window backtesting.
//!
//! The series is split into a training and a test part. The window starts
//! as the last `W` training values; each step (re)fits the model every
//! `refit_stride` steps, forecasts one value ahead and slides the window by
//! one. In [`WindowMode::Recursive`] the forecast itself enters the window,
//! in [`WindowMode::RollingActuals`] the observed test value does. Test
//! values are otherwise only used for scoring.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::lstm::{lstm_train, LstmConfig, TrainedLstm};
use crate::series::{Exog, TimeSeries};
use crate::smoothing::{default_alpha_grid, es_select_alpha, EsModel};
use crate::tree::{lag_embed, lag_features, RegressionTree, TreeConfig};
use crate::{Error, ErrorTable, Result};

/// How the window advances after each forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Append the forecast.
    #[default]
    Recursive,
    /// Append the observed value.
    RollingActuals,
}

impl WindowMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WindowMode::Recursive => "recursive",
            WindowMode::RollingActuals => "rolling_actuals",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    /// Number of most recent values the models see and train on.
    pub window: usize,
    /// Refit every this many steps.
    pub refit_stride: usize,
    pub horizon: usize,
    pub mode: WindowMode,
    /// Share of the series used as the training part.
    pub train_fraction: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            window: 20,
            refit_stride: 1,
            horizon: 7,
            mode: WindowMode::Recursive,
            train_fraction: 0.8,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.window < 3 {
            return bad("window must be at least 3");
        }
        if self.refit_stride == 0 {
            return bad("refit_stride must be at least 1");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        Ok(())
    }
}

/// What a model sees: recent values and, when available, the matching
/// clicks and sales.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub values: Vec<f64>,
    pub exog: Option<Exog>,
}

impl Window {
    fn tail_of(series: &TimeSeries, len: usize) -> Self {
        let n = series.len();
        let start = n - len;
        Self {
            values: series.values()[start..].to_vec(),
            exog: series.exog().map(|e| Exog {
                clicks: e.clicks[start..].to_vec(),
                sales: e.sales[start..].to_vec(),
            }),
        }
    }

    fn whole(series: &TimeSeries) -> Self {
        Self::tail_of(series, series.len())
    }

    /// Appends a day, optionally dropping the oldest. Missing exog repeats
    /// the newest known counts.
    fn push(&mut self, value: f64, counts: Option<(u64, u64)>, slide: bool) {
        if slide {
            self.values.remove(0);
        }
        self.values.push(value);
        if let Some(e) = self.exog.as_mut() {
            let (clicks, sales) = counts.unwrap_or_else(|| {
                (
                    *e.clicks.last().unwrap_or(&0),
                    *e.sales.last().unwrap_or(&0),
                )
            });
            if slide {
                e.clicks.remove(0);
                e.sales.remove(0);
            }
            e.clicks.push(clicks);
            e.sales.push(sales);
        }
    }
}

/// Exponential smoothing settings: a fixed `alpha` in `(0, 1]`, or grid
/// selection when `alpha` is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsSpec {
    pub alpha: Option<f64>,
    pub grid: Vec<f64>,
}

impl Default for EsSpec {
    fn default() -> Self {
        Self {
            alpha: None,
            grid: default_alpha_grid(),
        }
    }
}

/// Model choice plus its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForecasterSpec {
    Es(EsSpec),
    Tree(TreeConfig),
    Lstm(LstmConfig),
    Naive,
}

impl ForecasterSpec {
    /// Column label in reports.
    pub fn label(&self) -> &'static str {
        match self {
            ForecasterSpec::Es(_) => "ES",
            ForecasterSpec::Tree(_) => "DT",
            ForecasterSpec::Lstm(_) => "LSTM",
            ForecasterSpec::Naive => "Naive",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ForecasterSpec::Es(spec) => {
                if let Some(a) = spec.alpha {
                    EsModel::new(a).map(|_| ())
                } else if spec.grid.is_empty() {
                    Err(Error::EmptyGrid)
                } else {
                    match spec.grid.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
                        Some(&a) => Err(Error::AlphaOutOfRange(a)),
                        None => Ok(()),
                    }
                }
            }
            ForecasterSpec::Tree(cfg) => cfg.validate(),
            ForecasterSpec::Lstm(cfg) => cfg.validate(),
            ForecasterSpec::Naive => Ok(()),
        }
    }

    /// Replaces the model's seed, if it has one.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let ForecasterSpec::Lstm(cfg) = &mut self {
            cfg.seed = seed;
        }
        self
    }

    pub fn build(&self) -> Result<Box<dyn Forecaster>> {
        self.validate()?;
        Ok(match self {
            ForecasterSpec::Es(spec) => Box::new(EsForecaster {
                spec: spec.clone(),
                alpha: None,
            }),
            ForecasterSpec::Tree(cfg) => Box::new(TreeForecaster {
                cfg: *cfg,
                tree: None,
            }),
            ForecasterSpec::Lstm(cfg) => Box::new(LstmForecaster {
                cfg: *cfg,
                trained: None,
            }),
            ForecasterSpec::Naive => Box::new(NaiveForecaster),
        })
    }
}

/// A fitted model in persistable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Es {
        alpha: f64,
    },
    Tree {
        config: TreeConfig,
        tree: RegressionTree,
        uses_exog: bool,
    },
    Lstm(TrainedLstm),
    Naive,
}

/// The contract the backtester drives.
pub trait Forecaster: Send {
    /// Trains on the window.
    fn fit(&mut self, window: &Window) -> Result<()>;
    /// Forecasts the value after the window's last day.
    fn predict_next(&self, window: &Window) -> Result<f64>;
    /// Current fitted state, if fitted.
    fn snapshot(&self) -> Option<FittedModel>;
}

struct NaiveForecaster;

impl Forecaster for NaiveForecaster {
    fn fit(&mut self, _window: &Window) -> Result<()> {
        Ok(())
    }

    fn predict_next(&self, window: &Window) -> Result<f64> {
        window.values.last().copied().ok_or(Error::EmptyWindow)
    }

    fn snapshot(&self) -> Option<FittedModel> {
        Some(FittedModel::Naive)
    }
}

struct EsForecaster {
    spec: EsSpec,
    alpha: Option<f64>,
}

impl Forecaster for EsForecaster {
    fn fit(&mut self, window: &Window) -> Result<()> {
        self.alpha = Some(match self.spec.alpha {
            Some(a) => a,
            None => es_select_alpha(&window.values, &self.spec.grid)?.0,
        });
        Ok(())
    }

    fn predict_next(&self, window: &Window) -> Result<f64> {
        let alpha = self.alpha.ok_or(Error::Uninitialized)?;
        let last = *window.values.last().ok_or(Error::EmptyWindow)?;
        EsModel::fit(alpha, &window.values)?.forecast_next(last)
    }

    fn snapshot(&self) -> Option<FittedModel> {
        self.alpha.map(|alpha| FittedModel::Es { alpha })
    }
}

struct TreeForecaster {
    cfg: TreeConfig,
    tree: Option<(RegressionTree, bool)>,
}

impl Forecaster for TreeForecaster {
    fn fit(&mut self, window: &Window) -> Result<()> {
        let uses_exog = self.cfg.use_exog && window.exog.is_some();
        let data = lag_embed(
            &window.values,
            window.exog.as_ref(),
            self.cfg.lag_order,
            uses_exog,
        )?;
        self.tree = Some((RegressionTree::fit(&data, &self.cfg)?, uses_exog));
        Ok(())
    }

    fn predict_next(&self, window: &Window) -> Result<f64> {
        let (tree, uses_exog) = self.tree.as_ref().ok_or(Error::Uninitialized)?;
        let exog = if *uses_exog {
            window.exog.as_ref()
        } else {
            None
        };
        tree.predict(&lag_features(&window.values, exog, self.cfg.lag_order)?)
    }

    fn snapshot(&self) -> Option<FittedModel> {
        self.tree
            .as_ref()
            .map(|(tree, uses_exog)| FittedModel::Tree {
                config: self.cfg,
                tree: tree.clone(),
                uses_exog: *uses_exog,
            })
    }
}

struct LstmForecaster {
    cfg: LstmConfig,
    trained: Option<TrainedLstm>,
}

impl Forecaster for LstmForecaster {
    fn fit(&mut self, window: &Window) -> Result<()> {
        self.trained = Some(lstm_train(&window.values, &self.cfg)?);
        Ok(())
    }

    fn predict_next(&self, window: &Window) -> Result<f64> {
        let trained = self.trained.as_ref().ok_or(Error::Uninitialized)?;
        let p = self.cfg.window;
        let n = window.values.len();
        if n < p {
            return Err(Error::SeriesTooShort {
                needed: p,
                found: n,
            });
        }
        trained.predict_next(&window.values[n - p..])
    }

    fn snapshot(&self) -> Option<FittedModel> {
        self.trained.clone().map(FittedModel::Lstm)
    }
}

/// One model's backtest: forecasts, the actuals they are scored against,
/// and the error table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub model: String,
    pub spec: ForecasterSpec,
    pub config: BacktestConfig,
    /// The initial window (last `W` training values).
    pub context: Vec<f64>,
    pub forecasts: Vec<f64>,
    pub actuals: Vec<f64>,
    pub errors: ErrorTable,
    /// Wall-clock run time, filled in by callers that can measure it.
    pub elapsed_secs: Option<f64>,
}

impl BacktestReport {
    /// Error table recomputed from the stored sequences.
    pub fn recompute(&self) -> Result<ErrorTable> {
        ErrorTable::compute(&self.actuals, &self.forecasts)
    }
}

/// Splits per `cfg.train_fraction` and checks the parts are long enough.
pub fn split_for_backtest(
    series: &TimeSeries,
    cfg: &BacktestConfig,
) -> Result<(TimeSeries, TimeSeries)> {
    cfg.validate()?;
    let (train, test) = series.split(cfg.train_fraction).map_err(|e| match e {
        Error::DegenerateSplit { len, fraction } => Error::InsufficientData(alloc::format!(
            "cannot split {len} values at fraction {fraction}"
        )),
        other => other,
    })?;
    if train.len() < cfg.window {
        return Err(Error::InsufficientData(alloc::format!(
            "training part has {} values, window needs {}",
            train.len(),
            cfg.window
        )));
    }
    if test.len() < cfg.horizon {
        return Err(Error::InsufficientData(alloc::format!(
            "test part has {} values, horizon needs {}",
            test.len(),
            cfg.horizon
        )));
    }
    Ok((train, test))
}

fn forecast_loop(
    forecaster: &mut dyn Forecaster,
    window: &mut Window,
    cfg: &BacktestConfig,
    test: &TimeSeries,
) -> Result<Vec<f64>> {
    let mut forecasts = Vec::with_capacity(cfg.horizon);
    for step in 0..cfg.horizon {
        if step % cfg.refit_stride == 0 {
            forecaster.fit(window)?;
        }
        let forecast = forecaster.predict_next(window)?;
        if !forecast.is_finite() {
            return Err(Error::NonFinite { index: step });
        }
        forecasts.push(forecast);
        match cfg.mode {
            WindowMode::Recursive => window.push(forecast, None, true),
            WindowMode::RollingActuals => {
                let counts = test.exog().map(|e| (e.clicks[step], e.sales[step]));
                window.push(test.values()[step], counts, true);
            }
        }
    }
    Ok(forecasts)
}

/// Runs one model through the rolling-window protocol.
pub fn run_backtest(
    series: &TimeSeries,
    spec: &ForecasterSpec,
    cfg: &BacktestConfig,
) -> Result<BacktestReport> {
    let (train, test) = split_for_backtest(series, cfg)?;
    run_on_split(&train, &test, spec, cfg)
}

/// [`run_backtest`] on an explicit split.
pub fn run_on_split(
    train: &TimeSeries,
    test: &TimeSeries,
    spec: &ForecasterSpec,
    cfg: &BacktestConfig,
) -> Result<BacktestReport> {
    cfg.validate()?;
    if train.len() < cfg.window || test.len() < cfg.horizon {
        return Err(Error::InsufficientData(alloc::format!(
            "need {} training and {} test values, got {} and {}",
            cfg.window,
            cfg.horizon,
            train.len(),
            test.len()
        )));
    }
    let mut forecaster = spec.build()?;
    let mut window = Window::tail_of(train, cfg.window);
    let context = window.values.clone();
    let forecasts = forecast_loop(forecaster.as_mut(), &mut window, cfg, test)?;
    let actuals = test.values()[..cfg.horizon].to_vec();
    let errors = ErrorTable::compute(&actuals, &forecasts)?;
    Ok(BacktestReport {
        model: spec.label().to_string(),
        spec: spec.clone(),
        config: *cfg,
        context,
        forecasts,
        actuals,
        errors,
        elapsed_secs: None,
    })
}

/// Runs every spec on the same split; reports come back in `specs` order.
pub fn compare_models(
    series: &TimeSeries,
    specs: &[ForecasterSpec],
    cfg: &BacktestConfig,
) -> Result<Vec<BacktestReport>> {
    let (train, test) = split_for_backtest(series, cfg)?;
    specs
        .iter()
        .map(|spec| run_on_split(&train, &test, spec, cfg))
        .collect()
}

/// Fits on the whole series and forecasts `ahead` values, feeding each
/// forecast back in. Returns the forecasts and the fitted model.
pub fn forecast_ahead(
    series: &TimeSeries,
    spec: &ForecasterSpec,
    ahead: usize,
) -> Result<(Vec<f64>, Option<FittedModel>)> {
    let mut forecaster = spec.build()?;
    let mut window = Window::whole(series);
    forecaster.fit(&window)?;
    let mut out = Vec::with_capacity(ahead);
    for _ in 0..ahead {
        let f = forecaster.predict_next(&window)?;
        out.push(f);
        window.push(f, None, false);
    }
    Ok((out, forecaster.snapshot()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use chrono::NaiveDate;

    fn series(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(values, NaiveDate::from_ymd_opt(2023, 1, 1).unwrap()).unwrap()
    }

    fn cfg(window: usize, horizon: usize, mode: WindowMode) -> BacktestConfig {
        BacktestConfig {
            window,
            horizon,
            mode,
            ..BacktestConfig::default()
        }
    }

    #[test]
    fn naive_recursive_repeats_last_training_value() {
        let s = series((0..30).map(|t| (t % 7) as f64).collect());
        let (train, test) = s.split_at(25).unwrap();
        let r = run_on_split(
            &train,
            &test,
            &ForecasterSpec::Naive,
            &cfg(5, 5, WindowMode::Recursive),
        )
        .unwrap();
        let last = *train.values().last().unwrap();
        assert_eq!(r.forecasts, vec![last; 5]);
        assert_eq!(r.actuals, test.values());
        assert_eq!(r.context.len(), 5);
    }

    #[test]
    fn naive_rolling_actuals() {
        let mut values: Vec<f64> = (0..10).map(f64::from).collect();
        values.extend([4.0, 7.0, 1.0]);
        let (train, test) = series(values).split_at(10).unwrap();
        let r = run_on_split(
            &train,
            &test,
            &ForecasterSpec::Naive,
            &cfg(3, 3, WindowMode::RollingActuals),
        )
        .unwrap();
        assert_eq!(r.forecasts, vec![9.0, 4.0, 7.0]);
    }

    #[test]
    fn es_alpha_one_matches_naive() {
        let s = series((0..40).map(|t| ((t * 13) % 11) as f64).collect());
        let c = cfg(10, 6, WindowMode::RollingActuals);
        let es = ForecasterSpec::Es(EsSpec {
            alpha: Some(1.0),
            ..EsSpec::default()
        });
        let a = run_backtest(&s, &es, &c).unwrap();
        let b = run_backtest(&s, &ForecasterSpec::Naive, &c).unwrap();
        assert_eq!(a.forecasts, b.forecasts);
    }

    #[test]
    fn insufficient_data() {
        let s = series(vec![1.0; 12]);
        let err = run_backtest(&s, &ForecasterSpec::Naive, &BacktestConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
        let bad = BacktestConfig {
            window: 2,
            ..BacktestConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn window_push_carries_counts() {
        let mut w = Window {
            values: vec![1.0, 2.0],
            exog: Some(Exog {
                clicks: vec![10, 20],
                sales: vec![1, 2],
            }),
        };
        w.push(3.0, None, true);
        assert_eq!(w.values, vec![2.0, 3.0]);
        assert_eq!(w.exog.as_ref().unwrap().clicks, vec![20, 20]);
        w.push(4.0, Some((7, 0)), false);
        assert_eq!(w.exog.unwrap().sales, vec![2, 2, 0]);
    }

    #[test]
    fn forecast_ahead_naive() {
        let s = series(vec![1.0, 5.0, 3.0]);
        let (f, model) = forecast_ahead(&s, &ForecasterSpec::Naive, 3).unwrap();
        assert_eq!(f, vec![3.0; 3]);
        assert_eq!(model, Some(FittedModel::Naive));
    }
}
