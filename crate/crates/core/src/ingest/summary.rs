//! CHB-MIT `chbNN-summary.txt` parsing and writing.

use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::SeizureAnnotation;

/// One `File Name:` block. Seizure times are relative to the file start.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryEntry {
    pub file_name: String,
    /// Wall-clock start as seconds after midnight (may exceed 86400 in some files).
    pub start_clock: Option<f64>,
    pub end_clock: Option<f64>,
    pub seizures: Vec<SeizureAnnotation>,
}

impl SummaryEntry {
    /// Seconds between the start and end clocks, rolling over midnight.
    pub fn clock_duration(&self) -> Option<f64> {
        let (start, end) = (self.start_clock?, self.end_clock?);
        Some((end - start).rem_euclid(86_400.0))
    }
}

struct Block {
    entry: SummaryEntry,
    declared: Option<(usize, usize)>,
    pending_start: Option<(f64, usize)>,
}

impl Block {
    fn finish(mut self) -> Result<SummaryEntry> {
        if let Some((_, line)) = self.pending_start {
            return Err(parse_err(line, "seizure start time without end time"));
        }
        let found = self.entry.seizures.len();
        if let Some((n, line)) = self.declared {
            if n != found {
                return Err(parse_err(
                    line,
                    format!("{} declares {n} seizures but lists {found}", self.entry.file_name),
                ));
            }
        }
        self.entry.seizures.sort_by(|a, b| a.onset.total_cmp(&b.onset));
        for (i, s) in self.entry.seizures.iter_mut().enumerate() {
            s.seizure_index = i;
        }
        Ok(self.entry)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn value_after_colon(line: &str) -> &str {
    line.split_once(':').map_or("", |(_, v)| v.trim())
}

fn parse_seconds(value: &str, line: usize) -> Result<f64> {
    let number = value.trim_end_matches("seconds").trim_end_matches("secs").trim();
    number
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite() && *x >= 0.0)
        .ok_or_else(|| parse_err(line, format!("not a number of seconds: {value:?}")))
}

fn parse_clock(value: &str, line: usize) -> Result<f64> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.parse::<f64>().ok()).collect();
    match nums.as_deref() {
        Some([h, m, s]) => Ok(h * 3600.0 + m * 60.0 + s),
        _ => Err(parse_err(line, format!("not a HH:MM:SS time: {value:?}"))),
    }
}

/// Parses the summary text into per-file seizure lists.
///
/// Accepts both `Seizure Start Time:` and `Seizure N Start Time:` lines. Lines
/// outside file blocks (sampling rate, channel lists) are ignored.
pub fn parse_chbmit_summary(text: &str) -> Result<Vec<SummaryEntry>> {
    let mut entries = Vec::new();
    let mut block: Option<Block> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        let key = line.split_once(':').map(|(k, _)| k.trim().to_ascii_lowercase());
        let Some(key) = key else { continue };

        if key == "file name" {
            if let Some(b) = block.take() {
                entries.push(b.finish()?);
            }
            let name = value_after_colon(line);
            if name.is_empty() {
                return Err(parse_err(line_no, "empty file name"));
            }
            block = Some(Block {
                entry: SummaryEntry {
                    file_name: name.to_string(),
                    start_clock: None,
                    end_clock: None,
                    seizures: Vec::new(),
                },
                declared: None,
                pending_start: None,
            });
            continue;
        }

        let Some(b) = block.as_mut() else { continue };
        if key == "file start time" {
            b.entry.start_clock = Some(parse_clock(value_after_colon(line), line_no)?);
        } else if key == "file end time" {
            b.entry.end_clock = Some(parse_clock(value_after_colon(line), line_no)?);
        } else if key == "number of seizures in file" {
            let v = value_after_colon(line);
            let n = v
                .parse()
                .map_err(|_| parse_err(line_no, format!("not a seizure count: {v:?}")))?;
            b.declared = Some((n, line_no));
        } else if key.starts_with("seizure") && key.ends_with("start time") {
            if let Some((_, prev)) = b.pending_start {
                return Err(parse_err(prev, "seizure start time without end time"));
            }
            b.pending_start = Some((parse_seconds(value_after_colon(line), line_no)?, line_no));
        } else if key.starts_with("seizure") && key.ends_with("end time") {
            let end = parse_seconds(value_after_colon(line), line_no)?;
            let (onset, _) = b
                .pending_start
                .take()
                .ok_or_else(|| parse_err(line_no, "seizure end time without start time"))?;
            if end <= onset {
                return Err(parse_err(
                    line_no,
                    format!("seizure end {end} s is not after its start {onset} s"),
                ));
            }
            let seizure_index = b.entry.seizures.len();
            b.entry.seizures.push(SeizureAnnotation { seizure_index, onset, end });
        }
    }
    if let Some(b) = block.take() {
        entries.push(b.finish()?);
    }
    Ok(entries)
}

fn clock(seconds: f64) -> String {
    let s = seconds.round() as u64;
    format!("{:02}:{:02}:{:02}", s / 3600, (s / 60) % 60, s % 60)
}

/// Writes a summary in the layout [`parse_chbmit_summary`] reads.
pub fn write_chbmit_summary(fs: f64, channel_labels: &[String], entries: &[SummaryEntry]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Data Sampling Rate: {fs} Hz");
    out.push_str("*************************\n\n");
    out.push_str("Channels in EDF Files:\n**********************\n");
    for (i, l) in channel_labels.iter().enumerate() {
        let _ = writeln!(out, "Channel {}: {l}", i + 1);
    }
    for e in entries {
        let _ = writeln!(out, "\nFile Name: {}", e.file_name);
        if let Some(s) = e.start_clock {
            let _ = writeln!(out, "File Start Time: {}", clock(s));
        }
        if let Some(s) = e.end_clock {
            let _ = writeln!(out, "File End Time: {}", clock(s));
        }
        let _ = writeln!(out, "Number of Seizures in File: {}", e.seizures.len());
        for s in &e.seizures {
            let _ = writeln!(out, "Seizure Start Time: {} seconds", s.onset);
            let _ = writeln!(out, "Seizure End Time: {} seconds", s.end);
        }
    }
    out
}
