//! End-to-end sample construction for one subject.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Timeline;
use crate::par;

use super::{label_intervals, select_leading_seizures, slide_windows, Label, Stft, StftConfig, TimingPolicy};

/// Leave-one-seizure-out needs at least this many folds.
pub const MIN_LEADING_SEIZURES: usize = 3;

/// One labeled `(channel, frequency, time)` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample {
    pub tensor: Vec<f32>,
    pub shape: [usize; 3],
    pub label: Label,
    /// Leading seizure a preictal sample belongs to; `None` for interictal.
    pub fold_key: Option<usize>,
    /// Timeline seconds of the window start.
    pub origin: f64,
}

impl SpectralSample {
    fn sort_key(&self) -> (Label, Option<usize>, f64) {
        (self.label, self.fold_key, self.origin)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub preictal: usize,
    pub interictal: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetOptions {
    /// Evenly thins interictal windows to at most this many before featurization.
    pub max_interictal: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub policy: TimingPolicy,
    pub stft: StftConfig,
    pub fs: f64,
    pub channel_labels: Vec<String>,
    pub shape: [usize; 3],
    /// `seizure_index` of every leading seizure.
    pub leading: Vec<usize>,
    /// Leading seizures left without preictal samples.
    pub excluded: Vec<usize>,
    /// Sorted by (label, fold_key, origin).
    pub samples: Vec<SpectralSample>,
}

impl Dataset {
    pub fn counts(&self) -> ClassCounts {
        let preictal = self.samples.iter().filter(|s| s.label == Label::Preictal).count();
        ClassCounts { preictal, interictal: self.samples.len() - preictal }
    }

    /// Distinct fold keys of preictal samples, ascending.
    pub fn fold_keys(&self) -> Vec<usize> {
        self.samples
            .iter()
            .filter_map(|s| s.fold_key)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub(crate) fn sort_samples(samples: &mut [SpectralSample]) {
        samples.sort_by(|a, b| {
            let (ka, kb) = (a.sort_key(), b.sort_key());
            ka.0.cmp(&kb.0).then(ka.1.cmp(&kb.1)).then(ka.2.total_cmp(&kb.2))
        });
    }
}

struct PlannedWindow {
    label: Label,
    fold_key: Option<usize>,
    origin: f64,
    segment: usize,
    offset: usize,
}

fn thin<T>(items: Vec<T>, keep: usize) -> Vec<T> {
    let n = items.len();
    if n <= keep {
        return items;
    }
    let picks: BTreeSet<usize> = (0..keep).map(|i| i * n / keep).collect();
    items.into_iter().enumerate().filter(|(i, _)| picks.contains(i)).map(|(_, x)| x).collect()
}

/// Selects leading seizures, labels intervals, slides windows and featurizes them.
///
/// Windows that would cross a file boundary or an unrecorded gap are dropped.
pub fn build_dataset(
    timeline: &Timeline,
    policy: &TimingPolicy,
    cfg: &StftConfig,
    options: &DatasetOptions,
) -> Result<Dataset> {
    policy.validate()?;
    let stft = Stft::new(*cfg)?;
    let fs = timeline.fs();
    let window_samples = (policy.window_len * fs).round() as usize;
    let shape = stft.shape(timeline.n_channels(), window_samples)?;

    let annotations = timeline.annotations();
    let leading = select_leading_seizures(annotations, policy.seizure_free);
    let outcome = label_intervals(annotations, &leading, policy, &timeline.coverage());

    let mut preictal = Vec::new();
    let mut interictal = Vec::new();
    for iv in &outcome.intervals {
        for origin in slide_windows(iv, policy, fs) {
            let Some((segment, offset)) = timeline.locate(origin, window_samples) else { continue };
            let w = PlannedWindow { label: iv.label, fold_key: iv.source_seizure, origin, segment, offset };
            match iv.label {
                Label::Preictal => preictal.push(w),
                Label::Interictal => interictal.push(w),
            }
        }
    }
    if let Some(max) = options.max_interictal {
        interictal = thin(interictal, max);
    }
    let planned: Vec<PlannedWindow> = preictal.into_iter().chain(interictal).collect();

    let segments = timeline.segments();
    let featurized = par::map_slice(&planned, |w| -> Result<SpectralSample> {
        let rec = &segments[w.segment].recording;
        let channels: Vec<&[f64]> = (0..rec.n_channels())
            .map(|c| &rec.channel(c)[w.offset..w.offset + window_samples])
            .collect();
        let spec = stft.featurize(&channels)?;
        Ok(SpectralSample {
            tensor: spec.data.iter().map(|&v| v as f32).collect(),
            shape,
            label: w.label,
            fold_key: w.fold_key,
            origin: w.origin,
        })
    });
    let mut samples = featurized.into_iter().collect::<Result<Vec<_>>>()?;
    Dataset::sort_samples(&mut samples);

    let dataset = Dataset {
        policy: *policy,
        stft: *cfg,
        fs,
        channel_labels: timeline.segments()[0].recording.channel_labels().to_vec(),
        shape,
        leading: leading.iter().map(|&i| annotations[i].seizure_index).collect(),
        excluded: outcome.empty_preictal,
        samples,
    };
    let folds = dataset.fold_keys().len();
    if folds < MIN_LEADING_SEIZURES {
        return Err(Error::InsufficientSeizures { found: folds, required: MIN_LEADING_SEIZURES });
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Recording, SeizureAnnotation};

    /// Zero-valued recording at 8 Hz with seizures at the given onsets (60 s long).
    fn timeline(onsets: &[f64], duration: f64) -> Timeline {
        let fs = 8.0;
        let n = (duration * fs) as usize;
        let rec = Recording::new(vec!["A".into(), "B".into()], fs, vec![vec![0.0; n]; 2]).unwrap();
        let ann = onsets
            .iter()
            .enumerate()
            .map(|(i, &onset)| SeizureAnnotation { seizure_index: i, onset, end: onset + 60.0 })
            .collect();
        Timeline::single(rec, ann).unwrap()
    }

    fn small_stft() -> StftConfig {
        StftConfig { n_fft: 16, hop: 8, bins_kept: [1, 8], ..StftConfig::default() }
    }

    const H: f64 = 3600.0;

    #[test]
    fn three_leading_seizures_give_243_preictal_samples() {
        let t = timeline(&[10.0 * H, 20.0 * H, 30.0 * H], 40.0 * H);
        let d = build_dataset(&t, &TimingPolicy::default(), &small_stft(), &DatasetOptions::default()).unwrap();
        assert_eq!(d.counts().preictal, 243);
        assert_eq!(d.fold_keys(), [0, 1, 2]);
        assert!(d.samples.iter().filter(|s| s.label == Label::Preictal).all(|s| s.fold_key.is_some()));
        assert!(d.samples.iter().all(|s| s.shape == d.shape));
        // 30 s at 8 Hz = 240 samples, 16-point frames every 8
        assert_eq!(d.shape, [2, 8, 1 + (240 - 16) / 8]);
        let keys: Vec<_> = d.samples.iter().map(SpectralSample::sort_key).collect();
        assert!(keys.windows(2).all(|w| (w[0].0, w[0].1) <= (w[1].0, w[1].1)));
    }

    #[test]
    fn two_leading_seizures_are_insufficient() {
        // the third seizure is within 4 h of the second, so it does not lead
        let t = timeline(&[10.0 * H, 20.0 * H, 22.0 * H], 30.0 * H);
        match build_dataset(&t, &TimingPolicy::default(), &small_stft(), &DatasetOptions::default()) {
            Err(Error::InsufficientSeizures { found: 2, required: 3 }) => {}
            other => panic!("expected InsufficientSeizures, got {other:?}"),
        }
    }

    #[test]
    fn interictal_windows_keep_their_distance() {
        let t = timeline(&[10.0 * H, 20.0 * H, 30.0 * H], 40.0 * H);
        let p = TimingPolicy::default();
        let d = build_dataset(&t, &p, &small_stft(), &DatasetOptions { max_interictal: Some(50) }).unwrap();
        assert_eq!(d.counts().interictal, 50);
        for s in d.samples.iter().filter(|s| s.label == Label::Interictal) {
            for a in t.annotations() {
                let (ws, we) = (s.origin, s.origin + p.window_len);
                assert!(we <= a.onset - p.interictal_gap || ws >= a.end + p.interictal_gap);
            }
        }
    }

    #[test]
    fn thinning_is_even() {
        assert_eq!(thin((0..10).collect(), 5), [0, 2, 4, 6, 8]);
        assert_eq!(thin((0..3).collect(), 5), [0, 1, 2]);
    }
}
