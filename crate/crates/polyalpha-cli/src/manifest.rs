//! Run manifests: a JSON description of what a command did and where it
//! put its artifacts, so an output directory is self-describing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub started_unix_ms: u64,
    /// `null` until the run finishes; a manifest with no finish time marks
    /// an interrupted run.
    pub finished_unix_ms: Option<u64>,
    /// Full configuration snapshot the run used.
    pub config: serde_json::Value,
    /// File names written into the run directory.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn start(command: &str, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_ms: now_ms(),
            finished_unix_ms: None,
            config,
            artifacts: Vec::new(),
        }
    }

    pub fn finish(&mut self, artifacts: Vec<String>) {
        self.finished_unix_ms = Some(now_ms());
        self.artifacts = artifacts;
    }

    /// Atomically (re)write `manifest.json` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Runtime(format!("serializing manifest: {e}")))?;
        text.push('\n');
        let tmp = dir.join("manifest.json.tmp");
        fs::write(&tmp, text)?;
        fs::rename(&tmp, dir.join("manifest.json"))?;
        Ok(())
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Create the output directory and hand back a writer for artifacts.
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("creating {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write an artifact file and return its name for the manifest.
    pub fn write(&self, name: &str, contents: &str) -> Result<String, CliError> {
        fs::write(self.dir.join(name), contents)
            .map_err(|e| CliError::Runtime(format!("writing {name}: {e}")))?;
        Ok(name.to_string())
    }
}
