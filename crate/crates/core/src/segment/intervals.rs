//! Preictal/interictal interval labeling on a recorded timeline.

use serde::{Deserialize, Serialize};

use crate::ingest::SeizureAnnotation;

use super::{Label, TimingPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledInterval {
    pub start: f64,
    pub end: f64,
    pub label: Label,
    /// `seizure_index` of the leading seizure a preictal interval precedes.
    pub source_seizure: Option<usize>,
}

impl LabeledInterval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelOutcome {
    /// Sorted by start.
    pub intervals: Vec<LabeledInterval>,
    /// Leading seizures whose preictal period has no recorded data; they get no fold.
    pub empty_preictal: Vec<usize>,
}

/// Intersects `[start, end)` with sorted, disjoint spans.
fn clip(start: f64, end: f64, spans: &[(f64, f64)]) -> Vec<(f64, f64)> {
    spans
        .iter()
        .map(|&(a, b)| (start.max(a), end.min(b)))
        .filter(|(a, b)| b > a)
        .collect()
}

/// Removes `[cut_a, cut_b)` from every piece.
fn subtract(pieces: Vec<(f64, f64)>, cut_a: f64, cut_b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(pieces.len() + 1);
    for (a, b) in pieces {
        if cut_b <= a || cut_a >= b {
            out.push((a, b));
            continue;
        }
        if cut_a > a {
            out.push((a, cut_a));
        }
        if cut_b < b {
            out.push((cut_b, b));
        }
    }
    out
}

/// Labels recorded time around seizures.
///
/// For a leading seizure with onset `t` the preictal interval is
/// `[t - sph - sop, t - sph)`, truncated at the end of any earlier seizure and
/// clipped to `coverage`. Interictal time is recorded time at least
/// `interictal_gap` away from every seizure's onset and end.
///
/// `leading` holds positions into `annotations`; `coverage` holds sorted,
/// disjoint recorded spans.
pub fn label_intervals(
    annotations: &[SeizureAnnotation],
    leading: &[usize],
    policy: &TimingPolicy,
    coverage: &[(f64, f64)],
) -> LabelOutcome {
    let mut outcome = LabelOutcome::default();
    let mut preictal = Vec::new();

    for &i in leading {
        let seizure = annotations[i];
        let mut start = seizure.onset - policy.sph - policy.sop;
        let end = seizure.onset - policy.sph;
        if let Some(prev_end) = annotations[..i].iter().map(|a| a.end).reduce(f64::max) {
            start = start.max(prev_end);
        }
        let pieces = clip(start, end, coverage);
        if pieces.is_empty() {
            outcome.empty_preictal.push(seizure.seizure_index);
            continue;
        }
        for (a, b) in pieces {
            preictal.push(LabeledInterval {
                start: a,
                end: b,
                label: Label::Preictal,
                source_seizure: Some(seizure.seizure_index),
            });
        }
    }

    let mut interictal: Vec<(f64, f64)> = coverage.to_vec();
    for a in annotations {
        interictal = subtract(interictal, a.onset - policy.interictal_gap, a.end + policy.interictal_gap);
    }
    for p in &preictal {
        interictal = subtract(interictal, p.start, p.end);
    }

    outcome.intervals = preictal;
    outcome.intervals.extend(interictal.into_iter().map(|(start, end)| LabeledInterval {
        start,
        end,
        label: Label::Interictal,
        source_seizure: None,
    }));
    outcome.intervals.sort_by(|a, b| a.start.total_cmp(&b.start));
    outcome
}
