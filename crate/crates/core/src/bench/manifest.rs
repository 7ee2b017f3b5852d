//! Dataset manifests.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Watertight,
    Scans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestShape {
    pub id: String,
    pub mesh: PathBuf,
    /// `participant_id,vertex_index` CSV.
    pub ground_truth: PathBuf,
    /// Optional per-vertex field, one value per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
    pub class: String,
}

/// Shapes of a dataset. Relative paths are resolved against `base_dir`,
/// the directory holding the manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub kind: DatasetKind,
    pub shapes: Vec<ManifestShape>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate()?;
        Ok(manifest)
    }

    /// Checks that ids are unique and every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for s in &self.shapes {
            if !seen.insert(&s.id) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate shape id `{}`",
                    s.id
                )));
            }
            let files = [Some(&s.mesh), Some(&s.ground_truth), s.field.as_ref()];
            for f in files.into_iter().flatten() {
                let p = self.resolve(f);
                if !p.is_file() {
                    return Err(Error::io(
                        p,
                        std::io::Error::new(
                            std::io::ErrorKind::NotFound,
                            "referenced file not found",
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        crate::io::write_text(path, &(text + "\n"))
    }
}
