//! One subject's recordings placed on a common time axis.

use crate::error::{Error, Result};

use super::{validate_annotations, Recording, SeizureAnnotation, SummaryEntry};

const DAY: f64 = 86_400.0;

#[derive(Debug, Clone)]
pub struct TimelineSegment {
    pub name: String,
    /// Seconds from the timeline origin.
    pub start: f64,
    pub recording: Recording,
}

impl TimelineSegment {
    pub fn end(&self) -> f64 {
        self.start + self.recording.duration()
    }
}

/// Recorded segments (sorted, non-overlapping) and the seizures on them.
#[derive(Debug, Clone)]
pub struct Timeline {
    segments: Vec<TimelineSegment>,
    annotations: Vec<SeizureAnnotation>,
}

impl Timeline {
    /// A single continuous recording starting at the origin.
    pub fn single(recording: Recording, annotations: Vec<SeizureAnnotation>) -> Result<Self> {
        Self::new(
            vec![TimelineSegment { name: "recording".into(), start: 0.0, recording }],
            annotations,
        )
    }

    pub fn new(segments: Vec<TimelineSegment>, annotations: Vec<SeizureAnnotation>) -> Result<Self> {
        validate_annotations(&annotations)?;
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidConfig("timeline has no recordings".into()))?;
        let fs = first.recording.fs();
        let labels = first.recording.channel_labels().to_vec();
        for w in segments.windows(2) {
            if w[1].start < w[0].end() - 1e-6 {
                return Err(Error::InvalidConfig(format!(
                    "{} overlaps {} on the timeline",
                    w[1].name, w[0].name
                )));
            }
        }
        for s in &segments {
            if s.recording.fs() != fs || s.recording.channel_labels() != labels {
                return Err(Error::ShapeMismatch(format!(
                    "{} differs from {} in sampling rate or channels",
                    s.name, first.name
                )));
            }
        }
        Ok(Self { segments, annotations })
    }

    /// Places files on one axis and converts file-relative seizure times.
    /// See [`place_files`].
    pub fn assemble(files: Vec<(SummaryEntry, Recording)>) -> Result<Self> {
        let (entries, recordings): (Vec<_>, Vec<_>) = files.into_iter().unzip();
        let durations: Vec<f64> = recordings.iter().map(Recording::duration).collect();
        let (starts, annotations) = place_files(&entries, &durations);
        let segments = entries
            .into_iter()
            .zip(recordings)
            .zip(starts)
            .map(|((e, recording), start)| TimelineSegment { name: e.file_name, start, recording })
            .collect();
        Self::new(segments, annotations)
    }

    pub fn segments(&self) -> &[TimelineSegment] {
        &self.segments
    }

    pub fn annotations(&self) -> &[SeizureAnnotation] {
        &self.annotations
    }

    pub fn fs(&self) -> f64 {
        self.segments[0].recording.fs()
    }

    pub fn n_channels(&self) -> usize {
        self.segments[0].recording.n_channels()
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, TimelineSegment::end)
    }

    /// Recorded spans `[start, end)`, one per segment.
    pub fn coverage(&self) -> Vec<(f64, f64)> {
        self.segments.iter().map(|s| (s.start, s.end())).collect()
    }

    /// Segment index and first sample of a window lying entirely inside one segment.
    pub fn locate(&self, start: f64, len_samples: usize) -> Option<(usize, usize)> {
        self.segments.iter().enumerate().find_map(|(i, s)| {
            let offset = ((start - s.start) * s.recording.fs()).round();
            if offset < 0.0 {
                return None;
            }
            let offset = offset as usize;
            (offset + len_samples <= s.recording.n_samples()).then_some((i, offset))
        })
    }
}

/// Start time of each file and every seizure in global time.
///
/// Files are taken in the given order. When every entry carries a wall-clock
/// start time, files are placed by clock (rolling over midnight as needed),
/// so gaps between files stay unrecorded time. Otherwise files are laid end
/// to end by cumulative duration.
pub fn place_files(entries: &[SummaryEntry], durations: &[f64]) -> (Vec<f64>, Vec<SeizureAnnotation>) {
    let by_clock = entries.iter().all(|e| e.start_clock.is_some());
    let mut starts: Vec<f64> = Vec::with_capacity(entries.len());
    let mut annotations = Vec::new();
    let mut origin: Option<f64> = None;
    let mut day = 0.0;
    for (i, entry) in entries.iter().enumerate() {
        let last_end = i.checked_sub(1).map_or(0.0, |p| starts[p] + durations[p]);
        let start = match (by_clock, entry.start_clock) {
            (true, Some(clock)) => {
                let mut abs = clock + day;
                if let Some(o) = origin {
                    // clocks restart at midnight; allow a second of slop between files
                    while abs - o < last_end - 1.0 {
                        day += DAY;
                        abs += DAY;
                    }
                }
                (abs - *origin.get_or_insert(abs)).max(last_end)
            }
            _ => last_end,
        };
        for s in &entry.seizures {
            annotations.push(SeizureAnnotation {
                seizure_index: annotations.len(),
                onset: start + s.onset,
                end: start + s.end,
            });
        }
        starts.push(start);
    }
    (starts, annotations)
}
