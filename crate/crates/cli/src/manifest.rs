//! Output directory bookkeeping and the run manifest.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{CliError, CliResult};
use crate::format::json_text;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub tool_version: String,
    pub seeds: Vec<u64>,
    pub threads: usize,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub outputs: Vec<OutputFile>,
}

pub fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files under one directory and remembers them for the manifest.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Write {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, content: &str) -> CliResult<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, content).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        self.written.retain(|f| f.path != name);
        self.written.push(OutputFile {
            path: name.to_string(),
            bytes: content.len() as u64,
            sha256: sha256_hex(content.as_bytes()),
        });
        Ok(path)
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.written
    }

    /// Write `manifest.json` listing everything written so far.
    pub fn finish(mut self, mut manifest: RunManifest) -> CliResult<RunManifest> {
        manifest.outputs = self.written.clone();
        manifest.finished_at = now();
        self.write(MANIFEST_NAME, &json_text(&manifest))?;
        Ok(manifest)
    }
}

/// Re-hash every listed output; returns the paths that are missing or
/// whose content changed.
pub fn check_manifest(dir: &Path) -> CliResult<Vec<String>> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::ReadConfig {
        path: path.clone(),
        source,
    })?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::Data {
        path: path.clone(),
        message: e.to_string(),
    })?;
    Ok(m.outputs
        .iter()
        .filter(|f| match std::fs::read(dir.join(&f.path)) {
            Ok(b) => sha256_hex(&b) != f.sha256 || b.len() as u64 != f.bytes,
            Err(_) => true,
        })
        .map(|f| f.path.clone())
        .collect())
}
