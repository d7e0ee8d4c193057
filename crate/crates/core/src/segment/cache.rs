//! Dataset cache: `manifest.json` plus `samples.f32`, the sample tensors as
//! little-endian 32-bit floats concatenated in manifest order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ClassCounts, Dataset, Label, SpectralSample, StftConfig, TimingPolicy};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SAMPLES_FILE: &str = "samples.f32";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub label: Label,
    pub fold_key: Option<usize>,
    pub origin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheManifest {
    pub policy: TimingPolicy,
    pub stft: StftConfig,
    pub fs: f64,
    pub channel_labels: Vec<String>,
    pub shape: [usize; 3],
    pub counts: ClassCounts,
    pub leading_seizures: Vec<usize>,
    pub excluded_seizures: Vec<usize>,
    pub samples: Vec<SampleEntry>,
}

impl CacheManifest {
    pub fn of(dataset: &Dataset) -> Self {
        Self {
            policy: dataset.policy,
            stft: dataset.stft,
            fs: dataset.fs,
            channel_labels: dataset.channel_labels.clone(),
            shape: dataset.shape,
            counts: dataset.counts(),
            leading_seizures: dataset.leading.clone(),
            excluded_seizures: dataset.excluded.clone(),
            samples: dataset
                .samples
                .iter()
                .map(|s| SampleEntry { label: s.label, fold_key: s.fold_key, origin: s.origin })
                .collect(),
        }
    }
}

/// Writes `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, bytes).map_err(|e| Error::from(e).in_file(&tmp))?;
    fs::rename(&tmp, path).map_err(|e| Error::from(e).in_file(path))?;
    Ok(())
}

pub fn encode_samples(samples: &[SpectralSample]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.iter().map(|s| 4 * s.tensor.len()).sum());
    for s in samples {
        for v in &s.tensor {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_cache(dir: &Path, dataset: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
    write_atomic(&dir.join(SAMPLES_FILE), &encode_samples(&dataset.samples))?;
    let manifest = serde_json::to_vec_pretty(&CacheManifest::of(dataset))?;
    write_atomic(&dir.join(MANIFEST_FILE), &manifest)
}

pub fn read_cache(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read(&manifest_path).map_err(|e| Error::from(e).in_file(&manifest_path))?;
    let m: CacheManifest =
        serde_json::from_slice(&text).map_err(|e| Error::from(e).in_file(&manifest_path))?;
    let samples_path = dir.join(SAMPLES_FILE);
    let bytes = fs::read(&samples_path).map_err(|e| Error::from(e).in_file(&samples_path))?;
    let per = m.shape.iter().product::<usize>();
    let expected = 4 * per * m.samples.len();
    if bytes.len() != expected {
        return Err(Error::TruncatedData { expected, found: bytes.len() }.in_file(samples_path));
    }
    let samples = m
        .samples
        .iter()
        .zip(bytes.chunks_exact(4 * per))
        .map(|(e, chunk)| SpectralSample {
            tensor: chunk.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect(),
            shape: m.shape,
            label: e.label,
            fold_key: e.fold_key,
            origin: e.origin,
        })
        .collect();
    Ok(Dataset {
        policy: m.policy,
        stft: m.stft,
        fs: m.fs,
        channel_labels: m.channel_labels,
        shape: m.shape,
        leading: m.leading_seizures,
        excluded: m.excluded_seizures,
        samples,
    })
}
