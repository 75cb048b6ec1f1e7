use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliResult;
use crate::io;

pub const MANIFEST_FILE: &str = "manifest.json";

/// What produced a set of output files. JSON outputs embed it; the copy in
/// `manifest.json` also lists every file written and the timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub version: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
    /// Seconds.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: impl Serialize, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            seed,
            version: concat!("crpmap ", env!("CARGO_PKG_VERSION")).to_string(),
            outputs: Vec::new(),
            timings: BTreeMap::new(),
        }
    }
}

/// Collects the files written into one directory and finishes with the
/// manifest itself.
pub struct OutputDir {
    pub dir: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl OutputDir {
    pub fn create(dir: &Path, manifest: RunManifest) -> CliResult<Self> {
        io::ensure_dir(dir)?;
        Ok(OutputDir { dir: dir.to_path_buf(), manifest, started: Instant::now() })
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.manifest.outputs.push(name.to_string());
        self.dir.join(name)
    }

    pub fn timing(&mut self, key: &str, seconds: f64) {
        self.manifest.timings.insert(key.to_string(), seconds);
    }

    pub fn finish(mut self) -> CliResult<RunManifest> {
        let total = self.started.elapsed().as_secs_f64();
        self.manifest.timings.insert("total".into(), total);
        io::write_json(&self.dir.join(MANIFEST_FILE), &self.manifest)?;
        Ok(self.manifest)
    }
}

/// Attaches the manifest (without file list and timings) to a JSON object.
pub fn with_manifest(mut value: Value, manifest: &RunManifest) -> Value {
    let mut m = manifest.clone();
    m.outputs.clear();
    m.timings.clear();
    if let Value::Object(map) = &mut value {
        map.insert("manifest".into(), serde_json::to_value(m).unwrap_or(Value::Null));
    }
    value
}
