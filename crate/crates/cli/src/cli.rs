//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or validation
//! errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::Days;
use clap::{Parser, Subcommand};
use sparsecast_core::arma::screen;
use sparsecast_core::backtest::{forecast_ahead, run_on_split, split_for_backtest, BacktestReport};
use sparsecast_core::series::{acf, whiteness_band, DEFAULT_MAX_LAG};
use sparsecast_core::TimeSeries;

use crate::config::{RunConfig, SeriesSource};
use crate::csv_io::{parse_csv, write_csv};
use crate::model_file::{ModelFile, NamedModel};
use crate::report::{render_forecasts_csv, render_report, render_screen, ReportFormat};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "sparsecast",
    version,
    about = "Forecasting and backtesting for sparse daily conversion series"
)]
struct Cli {
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a site-data CSV and print summary statistics.
    Ingest { csv: PathBuf },
    /// Print the sample autocorrelation of the conversion series.
    Acf {
        csv: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
        max_lag: usize,
    },
    /// Rank white noise, MA(1), AR(1) and ARMA(1,1) by AIC.
    Screen { csv: PathBuf },
    /// Write synthetic site data described by the config's generator section.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Backtest every configured model and write text, CSV and SVG reports.
    Backtest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit on the whole series and forecast ahead recursively.
    Forecast {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ahead: usize,
        /// Also save the fitted models as JSON.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn series_from_csv(path: &Path) -> Result<TimeSeries, CliError> {
    Ok(TimeSeries::from_records(&parse_csv(path)?)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::io("<stdout>", e);
    match cli.command {
        Command::Ingest { csv } => {
            let records = parse_csv(&csv)?;
            let values: Vec<f64> = records.iter().map(|r| r.conversion).collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            let zeros = values.iter().filter(|&&v| v == 0.0).count();
            let clicks: u64 = records.iter().map(|r| r.clicks).sum();
            let sales: u64 = records.iter().map(|r| r.sales).sum();
            let (first, last) = (&records[0], &records[records.len() - 1]);
            writeln!(out, "rows           {}", records.len()).map_err(io)?;
            writeln!(out, "dates          {} .. {}", first.date, last.date).map_err(io)?;
            writeln!(
                out,
                "conversion     mean {mean:.4}  sd {sd:.4}  min {:.4}  max {:.4}",
                values.iter().copied().fold(f64::INFINITY, f64::min),
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            )
            .map_err(io)?;
            writeln!(out, "zero fraction  {:.4} ({zeros} days)", zeros as f64 / n).map_err(io)?;
            writeln!(out, "clicks         {clicks}").map_err(io)?;
            writeln!(out, "sales          {sales}").map_err(io)?;
        }
        Command::Acf { csv, max_lag } => {
            let series = series_from_csv(&csv)?;
            let r = acf(series.values(), max_lag)?;
            let band = whiteness_band(series.len());
            writeln!(out, "lag  acf        (band ±{band:.4})").map_err(io)?;
            let mut inside = 0;
            for (k, rk) in r.iter().enumerate() {
                let flag = if k > 0 && rk.abs() > band { "*" } else { "" };
                if k > 0 && rk.abs() <= band {
                    inside += 1;
                }
                writeln!(out, "{k:<4} {rk:>9.4} {flag}").map_err(io)?;
            }
            if max_lag > 0 {
                writeln!(out, "{inside} of {max_lag} lags inside the band").map_err(io)?;
            }
        }
        Command::Screen { csv } => {
            let series = series_from_csv(&csv)?;
            out.write_all(render_screen(&screen(series.values())?).as_bytes())
                .map_err(io)?;
        }
        Command::Synth { config, out: path } => {
            let cfg = load_config(&config, cli.seed)?;
            if !matches!(cfg.series, SeriesSource::Generate(_)) {
                return Err(CliError::Config(
                    "synth needs a `series.generate` section".into(),
                ));
            }
            let records = cfg.records()?;
            write_csv(&records, &path)?;
            writeln!(out, "wrote {} rows to {}", records.len(), path.display()).map_err(io)?;
        }
        Command::Backtest { config } => {
            let cfg = load_config(&config, cli.seed)?;
            let series = cfg.load_series()?;
            let reports = run_models(&series, &cfg)?;
            std::fs::create_dir_all(&cfg.output.dir)
                .map_err(|e| CliError::io(&cfg.output.dir, e))?;
            let stem = cfg.output.dir.join(&cfg.output.stem);
            let text = render_report(&reports, ReportFormat::Text)?;
            for format in [ReportFormat::Text, ReportFormat::Csv, ReportFormat::Svg] {
                let body = render_report(&reports, format)?;
                write_file(&stem.with_extension(format.extension()), &body)?;
            }
            let mut forecasts_path = stem.clone().into_os_string();
            forecasts_path.push("_forecasts.csv");
            write_file(Path::new(&forecasts_path), &render_forecasts_csv(&reports)?)?;
            let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
            write_file(&stem.with_extension("json"), &(json + "\n"))?;
            out.write_all(text.as_bytes()).map_err(io)?;
            writeln!(
                out,
                "reports written to {}.{{txt,csv,svg,json}}",
                stem.display()
            )
            .map_err(io)?;
        }
        Command::Forecast {
            config,
            ahead,
            model_out,
        } => {
            if ahead == 0 {
                return Err(CliError::Usage("--ahead must be at least 1".into()));
            }
            let cfg = load_config(&config, cli.seed)?;
            let series = cfg.load_series()?;
            let mut columns = Vec::new();
            let mut fitted = Vec::new();
            for spec in &cfg.models {
                let (values, model) = forecast_ahead(&series, spec, ahead)?;
                columns.push((spec.label(), values));
                if let Some(m) = model {
                    fitted.push(NamedModel {
                        label: spec.label().into(),
                        fitted: m,
                    });
                }
            }
            write!(out, "date").map_err(io)?;
            for (label, _) in &columns {
                write!(out, ",{label}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
            for step in 0..ahead {
                let date = series
                    .start_date()
                    .checked_add_days(Days::new((series.len() + step) as u64))
                    .map_or_else(|| format!("+{}", step + 1), |d| d.to_string());
                write!(out, "{date}").map_err(io)?;
                for (_, values) in &columns {
                    write!(out, ",{}", values[step]).map_err(io)?;
                }
                writeln!(out).map_err(io)?;
            }
            if let Some(path) = model_out {
                ModelFile::new(fitted).save(&path)?;
            }
        }
    }
    Ok(())
}

/// Backtests every model on its own thread; reports keep config order.
pub fn run_models(series: &TimeSeries, cfg: &RunConfig) -> Result<Vec<BacktestReport>, CliError> {
    let (train, test) = split_for_backtest(series, &cfg.backtest)?;
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .models
            .iter()
            .map(|spec| {
                let (train, test) = (&train, &test);
                scope.spawn(move || {
                    let started = Instant::now();
                    run_on_split(train, test, spec, &cfg.backtest).map(|mut r| {
                        r.elapsed_secs = Some(started.elapsed().as_secs_f64());
                        r
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("backtest thread panicked"))
            .collect()
    });
    Ok(results.into_iter().collect::<Result<Vec<_>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["sparsecast"]), 1);
        assert_eq!(run(["sparsecast", "frobnicate"]), 1);
        assert_eq!(run(["sparsecast", "acf"]), 1);
        assert_eq!(run(["sparsecast", "acf", "x.csv", "--max-lag", "many"]), 1);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["sparsecast", "--help"]), 0);
    }

    #[test]
    fn missing_file_exits_two() {
        assert_eq!(run(["sparsecast", "acf", "/nonexistent/missing.csv"]), 2);
    }
}
