use std::path::{Path, PathBuf};

use cityforge_core::edit::{EditContext, StyleLexicon};
use cityforge_core::executor::{ComponentTable, ExecutorConfig};
use cityforge_core::metrics::RosConfig;
use cityforge_core::scoring::{DensityBand, ExternalScorerConfig, ScoringConfig};
use serde::{Deserialize, Serialize};

/// Settings shared by every subcommand, read from a JSON file.
///
/// ```json
/// {
///   "floor_height": 3.0,
///   "bay_width": 2.5,
///   "band": {"d_min": 0.5, "d_max": 0.8},
///   "palette": {"building": "#1f4fd8", "greenspace": "#2e9e44", "background": "#ffffff"},
///   "component_table": "components.json",
///   "style_lexicon": "styles.json",
///   "ros": {"tolerance_deg": 5.0, "scope": "shells"},
///   "scorer": {"url": "http://localhost:9000/judge", "timeout_ms": 30000}
/// }
/// ```
///
/// Every key is optional. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    #[serde(flatten)]
    pub executor: ExecutorConfig,
    #[serde(flatten)]
    pub scoring: ScoringConfig,
    pub component_table: Option<PathBuf>,
    pub style_lexicon: Option<PathBuf>,
    pub ros: RosConfig,
    /// External semantic judge; the stub is used when absent.
    pub scorer: Option<ExternalScorerConfig>,
    #[serde(skip)]
    pub styles: StyleLexicon,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut config: Config =
            serde_json::from_str(&text).map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.component_table, &mut config.style_lexicon].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        config.resolve()?;
        Ok(config)
    }

    /// Loads referenced tables and checks value ranges.
    pub fn resolve(&mut self) -> Result<(), ConfigError> {
        let band = self.scoring.band;
        DensityBand::new(band.d_min, band.d_max).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let e = &self.executor;
        if !(e.floor_height > 0.0 && e.floor_height.is_finite()) {
            return Err(ConfigError::Invalid(format!("floor_height must be positive, got {}", e.floor_height)));
        }
        if !(e.bay_width > 0.0 && e.bay_width.is_finite()) {
            return Err(ConfigError::Invalid(format!("bay_width must be positive, got {}", e.bay_width)));
        }
        if let Some(p) = &self.component_table {
            self.executor.components = ComponentTable::load(p).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if let Some(p) = &self.style_lexicon {
            self.styles = StyleLexicon::load(p).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn edit_context(&self) -> EditContext {
        EditContext { styles: self.styles.clone() }
    }
}
