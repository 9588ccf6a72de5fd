//! The optional TOML configuration file. Command-line flags override it.
//!
//! ```toml
//! [convert]
//! out = "site"
//! index = "jdk-index.json"
//! db = "annotations"
//! embed_assets = false
//! telemetry = "https://example.org/events"
//! graph_dump = true
//!
//! [serve]
//! port = 8080
//! log = "events.ndjson"
//!
//! [analysis]
//! learning_period = "15m"
//! session_gap = "2h"
//! hover_merge = "5s"
//! hover_min = "1s"
//! ```
//!
//! Relative paths are resolved against the directory of the file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use casdoc_core::telemetry::AnalysisConfig;
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvertSection {
    pub out: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub db: Option<PathBuf>,
    pub embed_assets: Option<bool>,
    pub telemetry: Option<String>,
    pub graph_dump: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSection {
    pub port: Option<u16>,
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub learning_period: Option<String>,
    pub session_gap: Option<String>,
    pub hover_merge: Option<String>,
    pub hover_min: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub convert: ConvertSection,
    pub serve: ServeSection,
    pub analysis: AnalysisSection,
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        rebase(base, &mut cfg.convert.out);
        rebase(base, &mut cfg.convert.index);
        rebase(base, &mut cfg.convert.db);
        rebase(base, &mut cfg.serve.log);
        Ok(cfg)
    }

    /// Thresholds from the `[analysis]` section over the defaults.
    pub fn analysis_config(&self) -> Result<AnalysisConfig> {
        let mut cfg = AnalysisConfig::default();
        let a = &self.analysis;
        for (value, slot, name) in [
            (&a.learning_period, &mut cfg.learning_period, "learning_period"),
            (&a.session_gap, &mut cfg.session_gap, "session_gap"),
            (&a.hover_merge, &mut cfg.hover_merge, "hover_merge"),
            (&a.hover_min, &mut cfg.hover_min, "hover_min"),
        ] {
            if let Some(text) = value {
                let d = humantime::parse_duration(text).with_context(|| format!("analysis.{name}: `{text}`"))?;
                *slot = millis(d);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn millis(d: Duration) -> i64 {
    i64::try_from(d.as_millis()).unwrap_or(i64::MAX)
}
