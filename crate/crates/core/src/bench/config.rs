//! Flat run configuration covering model, scanner and benchmark settings.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{PositiveSet, DEFAULT_BINS};
use crate::saliency::ModelParams;
use crate::scanner::{ScanConfig, TriangulationConfig};

/// Benchmark settings that are neither model nor scanner parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchOptions {
    pub histogram_bins: usize,
    /// When set, AUC positives are vertices whose normalized ground-truth
    /// field reaches this value instead of the selected vertices.
    pub auc_field_threshold: Option<f64>,
    /// Neighbors used to triangulate scans.
    pub triangulation_neighbors: usize,
    /// Fixations move to the nearest scan point within this fraction of R.
    pub fixation_radius: f64,
    /// Write a colored PLY per shape and model.
    pub export_maps: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            histogram_bins: DEFAULT_BINS,
            auc_field_threshold: None,
            triangulation_neighbors: TriangulationConfig::default().neighbors,
            fixation_radius: 0.01,
            export_maps: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub params: ModelParams,
    #[serde(flatten)]
    pub scan: ScanConfig,
    #[serde(flatten)]
    pub bench: BenchOptions,
}

impl RunConfig {
    /// Parses flat TOML, or JSON when the text starts with `{`. Unknown keys
    /// are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)
                .map_err(|e| Error::Config(format!("invalid JSON config: {e}")))?
        } else {
            let table: toml::Table = toml::from_str(text)
                .map_err(|e| Error::Config(format!("invalid TOML config: {e}")))?;
            serde_json::to_value(table).map_err(|e| Error::Config(e.to_string()))?
        };
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Config("config must be a flat table of keys".into()))?;
        let known = Self::keys();
        let unknown: Vec<&String> = obj.keys().filter(|k| !known.contains(k.as_str())).collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown config keys: {unknown:?}")));
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Every accepted key.
    pub fn keys() -> BTreeSet<String> {
        match serde_json::to_value(Self::default()) {
            Ok(serde_json::Value::Object(map)) => map.keys().cloned().collect(),
            _ => BTreeSet::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.scan.validate()?;
        if self.bench.histogram_bins < 2 {
            return Err(Error::InvalidParameter(
                "histogram_bins must be >= 2".into(),
            ));
        }
        if self.bench.triangulation_neighbors < 2 {
            return Err(Error::InvalidParameter(
                "triangulation_neighbors must be >= 2".into(),
            ));
        }
        if self.bench.fixation_radius.is_nan() || self.bench.fixation_radius < 0.0 {
            return Err(Error::InvalidParameter(
                "fixation_radius must be >= 0".into(),
            ));
        }
        if let Some(t) = self.bench.auc_field_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidParameter(
                    "auc_field_threshold must lie in [0, 1]".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn positives(&self) -> PositiveSet {
        match self.bench.auc_field_threshold {
            Some(t) => PositiveSet::FieldAtLeast(t),
            None => PositiveSet::Selections,
        }
    }

    pub fn triangulation(&self) -> TriangulationConfig {
        TriangulationConfig {
            neighbors: self.bench.triangulation_neighbors,
            ..Default::default()
        }
    }
}
