//! From an annotated timeline to labeled `(channel, frequency, time)` tensors.

pub mod cache;
pub mod dataset;
pub mod intervals;
pub mod leading;
pub mod normalize;
pub mod stft;
pub mod windows;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cache::{read_cache, write_cache, CacheManifest};
pub use dataset::{build_dataset, ClassCounts, Dataset, DatasetOptions, SpectralSample, MIN_LEADING_SEIZURES};
pub use intervals::{label_intervals, LabelOutcome, LabeledInterval};
pub use leading::select_leading_seizures;
pub use normalize::BinStandardizer;
pub use stft::{stft_featurize, MagnitudeTransform, Spectrogram, Stft, StftConfig, WindowFn};
pub use windows::slide_windows;

/// Sample class. Ordering puts interictal first, matching dataset sort order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Interictal,
    Preictal,
}

impl Label {
    /// Index of the class in the model output (preictal is the positive class 1).
    pub fn class(self) -> usize {
        match self {
            Label::Interictal => 0,
            Label::Preictal => 1,
        }
    }
}

/// Seizure-relative timing rules, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingPolicy {
    /// Seizure occurrence period: length of the preictal interval.
    pub sop: f64,
    /// Seizure prediction horizon: gap between preictal end and onset.
    pub sph: f64,
    /// Minimum distance of interictal data from any seizure.
    pub interictal_gap: f64,
    /// Seizure-free time separating clusters; the first seizure of a cluster leads.
    pub seizure_free: f64,
    pub window_len: f64,
    pub overlap: f64,
}

impl Default for TimingPolicy {
    fn default() -> Self {
        Self {
            sop: 1800.0,
            sph: 300.0,
            interictal_gap: 4.0 * 3600.0,
            seizure_free: 4.0 * 3600.0,
            window_len: 30.0,
            overlap: 8.0,
        }
    }
}

impl TimingPolicy {
    /// Scales the seizure-relative rules so one hour lasts `seconds_per_hour`.
    /// Window length and overlap are sampling parameters and stay unscaled.
    pub fn compressed(self, seconds_per_hour: f64) -> Self {
        let f = seconds_per_hour / 3600.0;
        Self {
            sop: self.sop * f,
            sph: self.sph * f,
            interictal_gap: self.interictal_gap * f,
            seizure_free: self.seizure_free * f,
            ..self
        }
    }

    pub fn stride(&self) -> f64 {
        self.window_len - self.overlap
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sop > 0.0
            && self.sph >= 0.0
            && self.interictal_gap >= 0.0
            && self.seizure_free >= 0.0
            && self.window_len > 0.0
            && self.overlap >= 0.0
            && self.overlap < self.window_len;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid timing policy {self:?}")))
        }
    }
}
