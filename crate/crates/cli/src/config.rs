//! Run configuration (JSON).
//!
//! ```json
//! {
//!   "seed": 42,
//!   "series": { "csv": "data/site.csv" },
//!   "models": [{ "kind": "es" }, { "kind": "tree" }, { "kind": "lstm" }],
//!   "backtest": { "window": 20, "refit_stride": 1, "horizon": 7, "mode": "recursive" },
//!   "output": { "dir": "reports", "stem": "report" }
//! }
//! ```
//!
//! `series` is either `{"csv": path}` or `{"generate": {...generator...}}`.
//! Relative paths are resolved against the directory holding the config
//! file. Unknown keys are rejected. The top-level `seed` replaces every
//! seed inside the generator and model sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sparsecast_core::backtest::{BacktestConfig, EsSpec, ForecasterSpec};
use sparsecast_core::datagen::{gen_site_records, GenConfig};
use sparsecast_core::lstm::LstmConfig;
use sparsecast_core::tree::TreeConfig;
use sparsecast_core::{SiteRecord, TimeSeries};

use crate::csv_io::parse_csv;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SeriesSource {
    Csv(PathBuf),
    Generate(GenConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File name stem shared by the report files.
    pub stem: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("reports"),
            stem: "report".into(),
        }
    }
}

fn default_models() -> Vec<ForecasterSpec> {
    vec![
        ForecasterSpec::Es(EsSpec::default()),
        ForecasterSpec::Tree(TreeConfig::default()),
        ForecasterSpec::Lstm(LstmConfig::default()),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub series: SeriesSource,
    #[serde(default = "default_models")]
    pub models: Vec<ForecasterSpec>,
    #[serde(default)]
    pub backtest: BacktestConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses JSON text; relative paths are resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, serde_json::Error> {
        let mut cfg: RunConfig = serde_json::from_str(text)?;
        if let SeriesSource::Csv(path) = &mut cfg.series {
            if path.is_relative() {
                *path = base_dir.join(&*path);
            }
        }
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base_dir.join(&cfg.output.dir);
        }
        let seed = cfg.seed;
        cfg.set_seed(seed);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let cfg = Self::from_json(&text, base).map_err(|source| CliError::Json {
            path: path.to_owned(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Propagates `seed` to the generator and every model.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let SeriesSource::Generate(g) = &mut self.series {
            g.seed = seed;
        }
        self.models = std::mem::take(&mut self.models)
            .into_iter()
            .map(|m| m.with_seed(seed))
            .collect();
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.models.is_empty() {
            return Err(CliError::Config("at least one model is required".into()));
        }
        for m in &self.models {
            m.validate()?;
        }
        self.backtest.validate()?;
        if let SeriesSource::Generate(g) = &self.series {
            g.validate()?;
        }
        if let SeriesSource::Csv(p) = &self.series {
            if p.as_os_str().is_empty() {
                return Err(CliError::Config("series.csv path is empty".into()));
            }
        }
        let stem_ok = !self.output.stem.is_empty()
            && !self.output.stem.contains(['/', '\\'])
            && self.output.stem != "."
            && self.output.stem != "..";
        if !stem_ok {
            return Err(CliError::Config(format!(
                "output.stem `{}` is not a file name",
                self.output.stem
            )));
        }
        Ok(())
    }

    /// The site records named by `series`.
    pub fn records(&self) -> Result<Vec<SiteRecord>, CliError> {
        match &self.series {
            SeriesSource::Csv(path) => parse_csv(path),
            SeriesSource::Generate(g) => Ok(gen_site_records(g)?),
        }
    }

    pub fn load_series(&self) -> Result<TimeSeries, CliError> {
        Ok(TimeSeries::from_records(&self.records()?)?)
    }
}
