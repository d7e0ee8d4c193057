//! Per-command run record: what went in, what came out, and their digests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use seizure_core::segment::cache::write_atomic;

use crate::config::Seeds;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the manifest's directory when the file lies below it.
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_hash: Option<String>,
    pub seeds: Option<Seeds>,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

impl RunManifest {
    pub fn start(command: &str, config_hash: Option<String>, seeds: Option<Seeds>) -> Self {
        Self {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash,
            seeds,
            started_at: now(),
            finished_at: 0.0,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn digest(base: &Path, path: &Path) -> Result<FileDigest> {
        Ok(FileDigest {
            path: path.strip_prefix(base).unwrap_or(path).to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }

    pub fn input(&mut self, base: &Path, path: &Path) -> Result<()> {
        self.inputs.push(Self::digest(base, path)?);
        Ok(())
    }

    pub fn output(&mut self, base: &Path, path: &Path) -> Result<()> {
        self.outputs.push(Self::digest(base, path)?);
        Ok(())
    }

    pub fn file_name(command: &str) -> String {
        format!("run-{command}.json")
    }

    /// Stamps the finish time and writes `run-<command>.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<PathBuf> {
        self.finished_at = now();
        let path = dir.join(Self::file_name(&self.command));
        write_atomic(&path, &serde_json::to_vec_pretty(&self).map_err(seizure_core::Error::from)?)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_slice(&text).map_err(|e| seizure_core::Error::from(e).in_file(path))?)
    }

    /// Recomputes every recorded digest; returns the paths that no longer match.
    pub fn stale_files(&self, base: &Path) -> Vec<PathBuf> {
        self.inputs
            .iter()
            .chain(&self.outputs)
            .filter(|d| {
                let p = if d.path.is_absolute() { d.path.clone() } else { base.join(&d.path) };
                sha256_file(&p).map_or(true, |h| h != d.sha256)
            })
            .map(|d| d.path.clone())
            .collect()
    }
}
