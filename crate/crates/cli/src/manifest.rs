//! Run manifests: everything needed to replay a command.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// Fully resolved arguments; deserializing them back replays the run.
    pub parameters: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

/// Collects inputs, outputs and seeds while a command runs.
pub struct Run {
    started: Instant,
    started_unix_s: f64,
    seeds: BTreeMap<String, u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn start() -> Self {
        let unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Run {
            started: Instant::now(),
            started_unix_s: unix,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes the manifest to `path` and returns it.
    pub fn finish<P: Serialize>(mut self, command: &str, params: &P, path: &Path) -> Result<RunManifest> {
        self.outputs.push(path.to_path_buf());
        let m = RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            parameters: serde_json::to_value(params)?,
            seeds: self.seeds,
            inputs: self.inputs,
            outputs: self.outputs,
            started_unix_s: self.started_unix_s,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&m)?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(m)
    }
}
