//! Checkpoints: `<stem>.json` manifest plus `<stem>.params`, the flat
//! parameter vector as little-endian f64 in layout order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::cache::write_atomic;
use crate::segment::BinStandardizer;

use super::model::{ModelConfig, ModelParams};

pub const PARAM_ORDER: &str = "branch-major; per layer weights then bias; dense weights, dense bias";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub model: ModelConfig,
    pub epoch: usize,
    pub param_count: usize,
    pub param_order: String,
    pub normalization: Option<BinStandardizer>,
    pub metrics: Option<serde_json::Value>,
}

impl CheckpointManifest {
    pub fn new(model: ModelConfig, epoch: usize, params: &ModelParams) -> Self {
        Self {
            model,
            epoch,
            param_count: params.len(),
            param_order: PARAM_ORDER.into(),
            normalization: None,
            metrics: None,
        }
    }
}

fn paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.json")), dir.join(format!("{stem}.params")))
}

pub fn write_checkpoint(dir: &Path, stem: &str, manifest: &CheckpointManifest, params: &ModelParams) -> Result<()> {
    if manifest.param_count != params.len() {
        return Err(Error::ShapeMismatch(format!(
            "manifest declares {} params, got {}",
            manifest.param_count,
            params.len()
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
    let (json, bin) = paths(dir, stem);
    let bytes: Vec<u8> = params.data().iter().flat_map(|v| v.to_le_bytes()).collect();
    write_atomic(&bin, &bytes)?;
    write_atomic(&json, &serde_json::to_vec_pretty(manifest)?)
}

pub fn read_checkpoint(dir: &Path, stem: &str) -> Result<(CheckpointManifest, ModelParams)> {
    let (json, bin) = paths(dir, stem);
    let text = fs::read(&json).map_err(|e| Error::from(e).in_file(&json))?;
    let manifest: CheckpointManifest =
        serde_json::from_slice(&text).map_err(|e| Error::from(e).in_file(&json))?;
    let bytes = fs::read(&bin).map_err(|e| Error::from(e).in_file(&bin))?;
    let expected = manifest.model.layout().total;
    if bytes.len() != 8 * expected || manifest.param_count != expected {
        return Err(Error::TruncatedData { expected: 8 * expected, found: bytes.len() }.in_file(bin));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    let params = ModelParams::from_vec(&manifest.model, data)?;
    Ok((manifest, params))
}
