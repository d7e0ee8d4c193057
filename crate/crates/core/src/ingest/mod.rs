//! EEG ingestion: EDF files, CHB-MIT seizure summaries and synthetic recordings.

pub mod edf;
pub mod summary;
pub mod synth;
pub mod timeline;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use edf::{parse_edf_header, read_edf_signals, write_edf, EdfHeader, SignalHeader};
pub use summary::{parse_chbmit_summary, write_chbmit_summary, SummaryEntry};
pub use synth::{generate_synthetic_recording, PreictalSignature, SyntheticSpec};
pub use timeline::{place_files, Timeline, TimelineSegment};

/// Bipolar 18-channel montage present in every CHB-MIT recording we use.
pub const DEFAULT_MONTAGE: [&str; 18] = [
    "FP1-F7", "F7-T7", "T7-P7", "P7-O1", "FP1-F3", "F3-C3", "C3-P3", "P3-O1", "FP2-F4", "F4-C4",
    "C4-P4", "P4-O2", "FP2-F8", "F8-T8", "T8-P8", "P8-O2", "FZ-CZ", "CZ-PZ",
];

/// Multichannel EEG in µV, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    channel_labels: Vec<String>,
    fs: f64,
    n_samples: usize,
    samples: Vec<f64>,
}

impl Recording {
    pub fn new(channel_labels: Vec<String>, fs: f64, channels: Vec<Vec<f64>>) -> Result<Self> {
        if channel_labels.len() != channels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} channels",
                channel_labels.len(),
                channels.len()
            )));
        }
        let n_samples = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != n_samples) {
            return Err(Error::ShapeMismatch("channels differ in length".into()));
        }
        let samples = channels.concat();
        Self::from_flat(channel_labels, fs, n_samples, samples)
    }

    /// Builds a recording from channel-major samples.
    pub fn from_flat(
        channel_labels: Vec<String>,
        fs: f64,
        n_samples: usize,
        samples: Vec<f64>,
    ) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::ShapeMismatch(format!("sampling rate {fs} must be positive")));
        }
        if samples.len() != channel_labels.len() * n_samples {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for {} channels of {n_samples}",
                samples.len(),
                channel_labels.len()
            )));
        }
        Ok(Self { channel_labels, fs, n_samples, samples })
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.channel_labels
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn n_channels(&self) -> usize {
        self.channel_labels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.n_samples as f64 / self.fs
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.samples[index * self.n_samples..(index + 1) * self.n_samples]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Reorders/selects channels by label. The first channel carrying a label wins.
    pub fn select<S: AsRef<str>>(&self, labels: &[S]) -> Result<Recording> {
        let mut samples = Vec::with_capacity(labels.len() * self.n_samples);
        for label in labels {
            let label = label.as_ref();
            let idx = self.index_of(label).ok_or_else(|| Error::UnknownChannel(label.into()))?;
            samples.extend_from_slice(self.channel(idx));
        }
        Recording::from_flat(
            labels.iter().map(|l| l.as_ref().to_string()).collect(),
            self.fs,
            self.n_samples,
            samples,
        )
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.channel_labels.iter().position(|l| l.eq_ignore_ascii_case(label))
    }
}

/// Onset and end of one seizure, in seconds from the timeline origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeizureAnnotation {
    pub seizure_index: usize,
    pub onset: f64,
    pub end: f64,
}

impl SeizureAnnotation {
    pub fn duration(&self) -> f64 {
        self.end - self.onset
    }
}

/// Checks that annotations are well formed, sorted by onset and non-overlapping.
pub fn validate_annotations(annotations: &[SeizureAnnotation]) -> Result<()> {
    for (i, a) in annotations.iter().enumerate() {
        if !(a.end > a.onset && a.onset >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "seizure {i}: end {} must exceed onset {} >= 0",
                a.end, a.onset
            )));
        }
        if i > 0 && a.onset < annotations[i - 1].end {
            return Err(Error::InvalidConfig(format!(
                "seizure {i} starts before seizure {} ends",
                i - 1
            )));
        }
    }
    Ok(())
}
