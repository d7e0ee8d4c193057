//! Labeled synthetic EEG for desk-scale experiments.
//!
//! Time is compressed: every timing rule (SOP, SPH, interictal gap, seizure-free
//! time) is scaled by `seconds_per_hour / 3600`, so a 4 h gap takes
//! `4 * seconds_per_hour` seconds of data. Seizure `i` starts at
//! `(i + 1) * inter_seizure_gap`; the recording lasts `(n_seizures + 1) * inter_seizure_gap`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::segment::TimingPolicy;

use super::{Recording, SeizureAnnotation, DEFAULT_MONTAGE};

/// Narrowband rhythm added to every channel during preictal periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreictalSignature {
    pub center_hz: f64,
    /// Sinusoid amplitude as a multiple of `noise_amplitude`.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_channels: usize,
    pub fs: f64,
    pub n_seizures: usize,
    /// Onset-to-onset spacing in seconds.
    pub inter_seizure_gap: f64,
    pub seizure_duration: f64,
    pub preictal_signature: PreictalSignature,
    /// Standard deviation of the Gaussian background, µV.
    pub noise_amplitude: f64,
    /// Seconds of data standing in for one hour.
    pub seconds_per_hour: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_channels: 4,
            fs: 128.0,
            n_seizures: 3,
            inter_seizure_gap: 5400.0,
            seizure_duration: 40.0,
            preictal_signature: PreictalSignature { center_hz: 18.0, gain: 3.0 },
            noise_amplitude: 10.0,
            seconds_per_hour: 600.0,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    /// The default timing rules in this spec's compressed time.
    pub fn timing(&self) -> TimingPolicy {
        TimingPolicy::default().compressed(self.seconds_per_hour)
    }

    pub fn duration(&self) -> f64 {
        (self.n_seizures + 1) as f64 * self.inter_seizure_gap
    }

    pub fn n_samples(&self) -> usize {
        (self.duration() * self.fs).round() as usize
    }

    pub fn channel_labels(&self) -> Vec<String> {
        (0..self.n_channels)
            .map(|i| DEFAULT_MONTAGE.get(i).map_or_else(|| format!("CH{}", i + 1), |l| l.to_string()))
            .collect()
    }

    pub fn annotations(&self) -> Vec<SeizureAnnotation> {
        (0..self.n_seizures)
            .map(|i| {
                let onset = (i + 1) as f64 * self.inter_seizure_gap;
                SeizureAnnotation { seizure_index: i, onset, end: onset + self.seizure_duration }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n_channels == 0 {
            return bad("n_channels must be at least 1".into());
        }
        if !(self.fs > 0.0 && self.fs.fract() == 0.0) {
            return bad(format!("fs {} must be a positive whole number", self.fs));
        }
        let sig = self.preictal_signature;
        if !(sig.center_hz > 0.0 && sig.center_hz < self.fs / 2.0) {
            return bad(format!("signature {} Hz must lie below Nyquist", sig.center_hz));
        }
        if !(sig.gain >= 0.0 && self.noise_amplitude >= 0.0) {
            return bad("gain and noise amplitude must be non-negative".into());
        }
        if !(self.seconds_per_hour > 0.0 && self.seizure_duration > 0.0) {
            return bad("seconds_per_hour and seizure_duration must be positive".into());
        }
        if !(self.inter_seizure_gap > 0.0) {
            return bad("inter_seizure_gap must be positive".into());
        }
        if self.n_seizures > 0 {
            let t = self.timing();
            // interictal room on both sides of each seizure plus one window between them
            let needed = 2.0 * t.interictal_gap + t.window_len;
            let free = self.inter_seizure_gap - self.seizure_duration;
            if free < needed || free < t.seizure_free {
                return bad(format!(
                    "inter_seizure_gap {} leaves {free} s between seizures; {needed} s needed",
                    self.inter_seizure_gap
                ));
            }
        }
        Ok(())
    }
}

/// Generates noise plus a preictal rhythm before each seizure and an ictal
/// discharge during it. Deterministic for a fixed seed.
pub fn generate_synthetic_recording(spec: &SyntheticSpec) -> Result<(Recording, Vec<SeizureAnnotation>)> {
    spec.validate()?;
    let annotations = spec.annotations();
    let timing = spec.timing();
    let n = spec.n_samples();
    let fs = spec.fs;
    let noise = Normal::new(0.0, spec.noise_amplitude)
        .map_err(|e| Error::InvalidSpec(format!("noise amplitude: {e}")))?;
    let sig = spec.preictal_signature;
    let to_index = |t: f64| ((t * fs).round().max(0.0) as usize).min(n);

    let channels = par::map_range(spec.n_channels, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(c as u64);
        let mut x: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
        for a in &annotations {
            let phase = rng.random::<f64>() * TAU;
            let amp = sig.gain * spec.noise_amplitude;
            let from = to_index(a.onset - timing.sph - timing.sop);
            let to = to_index(a.onset - timing.sph);
            for (i, v) in x[from..to].iter_mut().enumerate() {
                let t = (from + i) as f64 / fs;
                *v += amp * (TAU * sig.center_hz * t + phase).sin();
            }
            let (from, to) = (to_index(a.onset), to_index(a.end));
            for (i, v) in x[from..to].iter_mut().enumerate() {
                let t = (from + i) as f64 / fs;
                *v += 5.0 * spec.noise_amplitude * (TAU * 3.0 * t).sin();
            }
        }
        x
    });
    let recording = Recording::new(spec.channel_labels(), fs, channels)?;
    Ok((recording, annotations))
}
