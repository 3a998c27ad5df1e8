//! Run manifests written next to every output file.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::raster::ToneMap;
use crate::scalar::Precision;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// `[x_min, x_max, y_min, y_max]`.
    pub viewport: Option<[f64; 4]>,
    /// `[width, height]`.
    pub size: Option<[usize; 2]>,
    pub tone_map: Option<ToneMap>,
    pub precision: Option<Precision>,
    pub iterations: Option<usize>,
    pub worker_count: Option<usize>,
    pub seed: u64,
    /// Subcommand-specific settings and results.
    pub extra: Map<String, Value>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            viewport: None,
            size: None,
            tone_map: None,
            precision: None,
            iterations: None,
            worker_count: None,
            seed,
            extra: Map::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.extra.insert(key.to_string(), value.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is always serializable") + "\n"
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

/// `<output>.manifest.json`, in the output's directory.
pub fn manifest_path(output: &Path) -> PathBuf {
    sibling(output, "manifest.json")
}

/// `<output>.stats`, in the output's directory.
pub fn stats_path(output: &Path) -> PathBuf {
    sibling(output, "stats")
}

fn sibling(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    output.with_file_name(name)
}
