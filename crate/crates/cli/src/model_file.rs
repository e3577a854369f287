//! JSON persistence for fitted models.
//!
//! ```json
//! { "format": "sparsecast-model", "version": 1,
//!   "models": [ { "label": "LSTM", "fitted": { "kind": "lstm", ... } } ] }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sparsecast_core::backtest::FittedModel;

use crate::CliError;

pub const FORMAT: &str = "sparsecast-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedModel {
    pub label: String,
    pub fitted: FittedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub models: Vec<NamedModel>,
}

impl ModelFile {
    pub fn new(models: Vec<NamedModel>) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            models,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).map_err(|source| CliError::Json {
            path: path.to_owned(),
            source,
        })?;
        std::fs::write(path, json + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_owned(),
            source,
        })?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(CliError::Config(format!(
                "{}: unsupported model file {} v{}",
                path.display(),
                file.format,
                file.version
            )));
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sparsecast_core::backtest::{forecast_ahead, ForecasterSpec};
    use sparsecast_core::lstm::LstmConfig;
    use sparsecast_core::tree::TreeConfig;
    use sparsecast_core::TimeSeries;

    #[test]
    fn save_and_load() {
        let s = TimeSeries::new(
            (0..30).map(|t| ((t * 7) % 10) as f64).collect(),
            chrono::NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
        )
        .unwrap();
        let mut models = Vec::new();
        for spec in [
            ForecasterSpec::Tree(TreeConfig::default()),
            ForecasterSpec::Lstm(LstmConfig {
                epochs: 5,
                ..LstmConfig::default()
            }),
        ] {
            let (_, fitted) = forecast_ahead(&s, &spec, 1).unwrap();
            models.push(NamedModel {
                label: spec.label().into(),
                fitted: fitted.unwrap(),
            });
        }
        let file = ModelFile::new(models);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        file.save(&path).unwrap();
        assert_eq!(ModelFile::load(&path).unwrap(), file);
    }
}
