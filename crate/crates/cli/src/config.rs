//! Pipeline configuration file (TOML). Unknown keys are errors.
//!
//! ```toml
//! out_dir = "runs/synthetic"
//!
//! [seeds]
//! data = 7
//! init = 0
//! train = 0
//!
//! [source.synthetic]        # or [source.edf] with `dir` and `summary`
//! n_seizures = 3
//!
//! [timing]                  # overlays the source's default rules
//! [stft]
//! [model]
//! n_filters = 16
//! [train]
//! [dataset]
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use seizure_core::ingest::{SyntheticSpec, DEFAULT_MONTAGE};
use seizure_core::net::ModelConfig;
use seizure_core::segment::{DatasetOptions, StftConfig, TimingPolicy};
use seizure_core::train::TrainConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    /// Synthetic data generation.
    pub data: u64,
    /// Network initialization.
    pub init: u64,
    /// Sampling, shuffling and undersampling during training.
    pub train: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { data: 7, init: 0, train: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdfSource {
    /// Directory holding the EDF files named in the summary.
    pub dir: PathBuf,
    /// CHB-MIT style summary text.
    pub summary: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    Synthetic(SyntheticSpec),
    Edf(EdfSource),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub n_filters: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { n_filters: ModelConfig::default().n_filters }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Channels to read, in order. Defaults to the 18-channel bipolar montage
    /// for EDF sources and to every channel for synthetic ones.
    #[serde(default)]
    pub montage: Option<Vec<String>>,
    #[serde(default)]
    pub seeds: Seeds,
    pub source: Source,
    pub timing: TimingPolicy,
    #[serde(default)]
    pub stft: StftConfig,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub dataset: DatasetOptions,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Keys that would duplicate a `[seeds]` entry or a derived value.
const FORBIDDEN: [(&str, &str, &str); 4] = [
    ("train", "seed", "use seeds.train"),
    ("model", "seed", "use seeds.init"),
    ("model", "input_shape", "it is taken from the dataset"),
    ("source.synthetic", "seed", "use seeds.data"),
];

fn lookup<'a>(root: &'a toml::Table, dotted: &str) -> Option<&'a toml::Table> {
    dotted.split('.').try_fold(root, |t, k| t.get(k)?.as_table())
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut root: toml::Table = toml::from_str(text).map_err(config_err)?;
        for (section, key, hint) in FORBIDDEN {
            if lookup(&root, section).is_some_and(|t| t.contains_key(key)) {
                return Err(CliError::Config(format!("{section}.{key} is not allowed: {hint}")));
            }
        }
        let source: Source = root
            .get("source")
            .cloned()
            .ok_or_else(|| CliError::Config("missing [source] section".into()))?
            .try_into()
            .map_err(config_err)?;
        let base = match &source {
            Source::Synthetic(spec) => spec.timing(),
            Source::Edf(_) => TimingPolicy::default(),
        };
        let mut timing = toml::Table::try_from(base).map_err(config_err)?;
        if let Some(v) = root.remove("timing") {
            let overlay = v.as_table().ok_or_else(|| CliError::Config("timing must be a table".into()))?;
            timing.extend(overlay.clone());
        }
        root.insert("timing".into(), toml::Value::Table(timing));
        let cfg: Self = toml::Value::Table(root).try_into().map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        if let Source::Edf(src) = &mut self.source {
            fix(&mut src.dir);
            fix(&mut src.summary);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.timing.validate()?;
        self.stft.validate()?;
        self.train.validate()?;
        if let Source::Synthetic(spec) = &self.source {
            spec.validate()?;
        }
        if self.model.n_filters == 0 {
            return Err(CliError::Config("model.n_filters must be positive".into()));
        }
        if self.montage.as_ref().is_some_and(Vec::is_empty) {
            return Err(CliError::Config("montage must list at least one channel".into()));
        }
        Ok(())
    }

    /// Replaces all three seeds.
    pub fn override_seed(&mut self, seed: u64) {
        self.seeds = Seeds { data: seed, init: seed, train: seed };
    }

    pub fn montage(&self) -> Option<Vec<String>> {
        match (&self.montage, &self.source) {
            (Some(m), _) => Some(m.clone()),
            (None, Source::Edf(_)) => Some(DEFAULT_MONTAGE.iter().map(|s| s.to_string()).collect()),
            (None, Source::Synthetic(_)) => None,
        }
    }

    /// The synthetic spec with the data seed applied.
    pub fn synthetic_spec(&self) -> Option<SyntheticSpec> {
        match &self.source {
            Source::Synthetic(spec) => Some(SyntheticSpec { seed: self.seeds.data, ..spec.clone() }),
            Source::Edf(_) => None,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seeds.train, ..self.train }
    }

    pub fn model_config(&self, input_shape: [usize; 3]) -> ModelConfig {
        ModelConfig { input_shape, n_filters: self.model.n_filters, seed: self.seeds.init }
    }

    /// SHA-256 of the resolved configuration.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    /// Hash of everything that determines the dataset cache.
    pub fn data_key(&self) -> String {
        let key = serde_json::json!({
            "source": self.synthetic_spec().map_or_else(|| serde_json::to_value(&self.source), serde_json::to_value)
                .expect("source serializes"),
            "montage": self.montage(),
            "timing": self.timing,
            "stft": self.stft,
            "dataset": self.dataset,
        });
        hex::encode(Sha256::digest(key.to_string()))
    }
}
