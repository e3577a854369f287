//! Report rendering: the error table as text or CSV, the forecast chart as
//! SVG, and the AIC screen table.

use std::fmt::Write as _;

use sparsecast_core::arma::AicScreenResult;
use sparsecast_core::backtest::BacktestReport;
use sparsecast_core::ErrorTable;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("no reports to render")]
    EmptyReports,
    #[error("report `{model}` is scored against different actuals")]
    MismatchedActuals { model: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Svg,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Text => "txt",
            ReportFormat::Csv => "csv",
            ReportFormat::Svg => "svg",
        }
    }
}

pub const METRIC_ROWS: [&str; 4] = ["MAD", "MD", "MSE", "MAPE"];

fn metric_values(t: &ErrorTable) -> [Option<f64>; 4] {
    [Some(t.mad), Some(t.md), Some(t.mse), t.mape]
}

/// Rounds to two decimals and drops trailing zeros: `64`, `1.2`, `-1.99`.
pub fn format_metric(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    };
    if s == "-0" {
        "0".to_owned()
    } else {
        s
    }
}

const LABEL_WIDTH: usize = 6;
const COLUMN_WIDTH: usize = 10;

/// The error table: one row per metric, one column per model.
pub fn render_error_table(columns: &[(&str, ErrorTable)]) -> String {
    let mut out = String::from("FORECAST ERRORS\n");
    out.push_str(&" ".repeat(LABEL_WIDTH));
    for (name, _) in columns {
        let _ = write!(out, "{name:>COLUMN_WIDTH$}");
    }
    out.push('\n');
    for (row, label) in METRIC_ROWS.iter().enumerate() {
        let _ = write!(out, "{label:<LABEL_WIDTH$}");
        for (_, table) in columns {
            let cell = metric_values(table)[row].map_or_else(|| "n/a".to_owned(), format_metric);
            let _ = write!(out, "{cell:>COLUMN_WIDTH$}");
        }
        out.push('\n');
    }
    out
}

/// Metrics as CSV with full precision. An undefined MAPE is an empty field.
pub fn render_error_csv(columns: &[(&str, ErrorTable)]) -> String {
    let mut out = String::from("metric");
    for (name, _) in columns {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for (row, label) in METRIC_ROWS.iter().enumerate() {
        out.push_str(label);
        for (_, table) in columns {
            out.push(',');
            if let Some(v) = metric_values(table)[row] {
                let _ = write!(out, "{v}");
            }
        }
        out.push('\n');
    }
    out
}

fn check(reports: &[BacktestReport]) -> Result<(), ReportError> {
    let first = reports.first().ok_or(ReportError::EmptyReports)?;
    for r in reports {
        if r.actuals != first.actuals || r.context != first.context {
            return Err(ReportError::MismatchedActuals {
                model: r.model.clone(),
            });
        }
    }
    Ok(())
}

fn columns(reports: &[BacktestReport]) -> Vec<(&str, ErrorTable)> {
    reports
        .iter()
        .map(|r| (r.model.as_str(), r.errors))
        .collect()
}

/// Renders reports that share one split and one set of actuals.
pub fn render_report(
    reports: &[BacktestReport],
    format: ReportFormat,
) -> Result<String, ReportError> {
    check(reports)?;
    let cols = columns(reports);
    Ok(match format {
        ReportFormat::Csv => render_error_csv(&cols),
        ReportFormat::Svg => render_svg(reports),
        ReportFormat::Text => {
            let mut out = render_error_table(&cols);
            let cfg = &reports[0].config;
            let _ = writeln!(
                out,
                "\nwindow {}, refit stride {}, horizon {}, mode {}",
                cfg.window,
                cfg.refit_stride,
                cfg.horizon,
                cfg.mode.as_str()
            );
            let errors = &reports[0].errors;
            let _ = writeln!(
                out,
                "MAPE over {} of {} days (days with a zero actual are skipped)",
                errors.n_used_mape,
                reports[0].actuals.len()
            );
            out
        }
    })
}

/// Per-step forecasts next to the actuals, full precision.
pub fn render_forecasts_csv(reports: &[BacktestReport]) -> Result<String, ReportError> {
    check(reports)?;
    let mut out = String::from("step,actual");
    for r in reports {
        let _ = write!(out, ",{}", r.model);
    }
    out.push('\n');
    for (step, actual) in reports[0].actuals.iter().enumerate() {
        let _ = write!(out, "{},{actual}", step + 1);
        for r in reports {
            let _ = write!(out, ",{}", r.forecasts[step]);
        }
        out.push('\n');
    }
    Ok(out)
}

/// The screen table: candidates by ascending AIC, then the verdict.
pub fn render_screen(result: &AicScreenResult) -> String {
    let mut out = format!("{:<3}{:<18}{:>10}\n", "", "Candidate", "AIC");
    for (i, fit) in result.fits.iter().enumerate() {
        let _ = writeln!(out, "{:<3}{:<18}{:>10.2}", i + 1, fit.kind.label(), fit.aic);
    }
    if result.arma_appropriate {
        let _ = writeln!(
            out,
            "ARMA candidate preferred (ΔAIC = {:.2})",
            result.delta_aic_vs_white_noise
        );
    } else {
        out.push_str("ARMA models not appropriate (ΔAIC < 2)\n");
    }
    out
}

const PALETTE: [&str; 6] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];
const DASHES: [&str; 4] = ["6 4", "2 3", "8 3 2 3", "4 2"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    width: f64,
    height: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    n: usize,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, i: usize) -> f64 {
        let span = (self.n.max(2) - 1) as f64;
        self.left + (self.width - self.left - self.right) * i as f64 / span
    }

    fn y(&self, v: f64) -> f64 {
        let h = self.height - self.top - self.bottom;
        self.top + h * (1.0 - (v - self.y_min) / (self.y_max - self.y_min))
    }

    fn points(&self, pts: impl Iterator<Item = (usize, f64)>) -> String {
        pts.map(|(i, v)| format!("{:.2},{:.2}", self.x(i), self.y(v)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Line chart: the actual series (training context then test actuals) as a
/// solid line and one dashed line per model starting at the forecast origin.
fn render_svg(reports: &[BacktestReport]) -> String {
    let context = &reports[0].context;
    let actuals = &reports[0].actuals;
    let origin = context.len().saturating_sub(1);
    let n = context.len() + actuals.len();

    let all = context
        .iter()
        .chain(actuals)
        .chain(reports.iter().flat_map(|r| &r.forecasts));
    let (mut y_min, mut y_max) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if y_max - y_min < 1e-9 {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let frame = Frame {
        width: 800.0,
        height: 420.0,
        left: 60.0,
        right: 150.0,
        top: 40.0,
        bottom: 50.0,
        n,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = frame.width,
        h = frame.height
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">Forecasts of each model</text>"#,
        (frame.left + frame.width - frame.right) / 2.0
    );

    let (x0, x1) = (frame.left, frame.width - frame.right);
    let (y0, y1) = (frame.height - frame.bottom, frame.top);
    let _ = writeln!(svg, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#
    );
    let _ = writeln!(svg, "</g>");

    let ticks = 5;
    for k in 0..=ticks {
        let v = frame.y_min + (frame.y_max - frame.y_min) * k as f64 / ticks as f64;
        let y = frame.y(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/><line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            format_metric(v)
        );
    }
    let stride = n.div_ceil(10).max(1);
    for i in (0..n).step_by(stride) {
        let x = frame.x(i);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            i + 1
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">day</text>"#,
        (x0 + x1) / 2.0,
        frame.height - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">conversion, %</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let xo = frame.x(origin);
    let _ = writeln!(
        svg,
        r##"<line x1="{xo:.2}" y1="{y0:.2}" x2="{xo:.2}" y2="{y1:.2}" stroke="#999999" stroke-dasharray="1 3"/>"##
    );

    let actual_pts = frame.points(context.iter().chain(actuals).copied().enumerate());
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="black" stroke-width="2" points="{actual_pts}"/>"#
    );
    for (m, r) in reports.iter().enumerate() {
        let start = context.last().map(|&v| (origin, v));
        let pts = frame.points(
            start.into_iter().chain(
                r.forecasts
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (context.len() + i, v)),
            ),
        );
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" stroke-dasharray="{}" points="{pts}"/>"#,
            PALETTE[m % PALETTE.len()],
            DASHES[m % DASHES.len()]
        );
    }

    let lx = frame.width - frame.right + 15.0;
    let mut ly = frame.top + 10.0;
    let _ = writeln!(
        svg,
        r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="black" stroke-width="2"/><text x="{:.2}" y="{:.2}">actual</text>"#,
        lx + 30.0,
        lx + 36.0,
        ly + 4.0
    );
    for (m, r) in reports.iter().enumerate() {
        ly += 20.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2" stroke-dasharray="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 30.0,
            PALETTE[m % PALETTE.len()],
            DASHES[m % DASHES.len()],
            lx + 36.0,
            ly + 4.0,
            escape(&r.model)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
