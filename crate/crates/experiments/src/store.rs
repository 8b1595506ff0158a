//! On-disk cell results, one JSON file per flight, so an interrupted sweep can resume.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};
use crate::runner::CellResult;

pub struct CellStore {
    root: PathBuf,
    dir: PathBuf,
}

/// One line of `index.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub key: String,
    /// Path relative to the store root, `None` when the cell failed.
    pub file: Option<String>,
    pub error: Option<String>,
}

impl CellStore {
    /// Store rooted at `<out>/cells`, created if missing.
    pub fn open(out: &Path) -> Result<Self> {
        let dir = out.join("cells");
        fs::create_dir_all(&dir).map_err(ExperimentError::io(&dir))?;
        Ok(Self { root: out.to_path_buf(), dir })
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Stored result of a cell. Unreadable or truncated files count as missing.
    pub fn load(&self, key: &str) -> Option<CellResult> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Writes through a temporary file and a rename, so a crash never leaves half a result.
    pub fn save(&self, result: &CellResult) -> Result<()> {
        let path = self.path(&result.cell.key());
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string(result).map_err(|source| ExperimentError::Json {
            path: path.clone(),
            source,
        })?;
        fs::write(&tmp, text).map_err(ExperimentError::io(&tmp))?;
        fs::rename(&tmp, &path).map_err(ExperimentError::io(&path))
    }

    /// Writes `<out>/index.json` listing every cell of the sweep in key order.
    pub fn write_index(&self, entries: &[IndexEntry]) -> Result<()> {
        let path = self.root.join("index.json");
        let text = serde_json::to_string_pretty(entries).map_err(|source| ExperimentError::Json {
            path: path.clone(),
            source,
        })?;
        fs::write(&path, text + "\n").map_err(ExperimentError::io(&path))
    }
}
