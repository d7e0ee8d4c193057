//! EDF (1992 base format) reader and writer.
//!
//! Layout: a 256-byte fixed ASCII header, then 256 bytes of ASCII per signal
//! (each field stored for all signals before the next field), then data records
//! of 16-bit little-endian two's-complement samples.

use crate::error::{Error, Result};

use super::Recording;

const FIXED_HEADER: usize = 256;
const PER_SIGNAL: usize = 256;
const ANNOTATION_LABEL: &str = "EDF Annotations";

#[derive(Debug, Clone, PartialEq)]
pub struct SignalHeader {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
    pub reserved: String,
}

impl SignalHeader {
    /// Physical value for a stored digital code.
    pub fn to_physical(&self, digital: i32) -> f64 {
        self.physical_min
            + (digital as f64 - self.digital_min as f64) * (self.physical_max - self.physical_min)
                / (self.digital_max as f64 - self.digital_min as f64)
    }

    /// Nearest digital code for a physical value, clamped to the digital range.
    pub fn to_digital(&self, physical: f64) -> i32 {
        let d = (physical - self.physical_min) * (self.digital_max as f64 - self.digital_min as f64)
            / (self.physical_max - self.physical_min)
            + self.digital_min as f64;
        d.round().clamp(self.digital_min as f64, self.digital_max as f64) as i32
    }

    /// Physical size of one digital step.
    pub fn quantization_step(&self) -> f64 {
        (self.physical_max - self.physical_min).abs()
            / (self.digital_max as f64 - self.digital_min as f64)
    }

    pub fn is_annotation(&self) -> bool {
        self.label == ANNOTATION_LABEL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdfHeader {
    pub version: String,
    pub patient: String,
    pub recording: String,
    pub start_date: String,
    pub start_time: String,
    pub header_bytes: usize,
    pub reserved: String,
    /// `-1` when the writer did not know the record count.
    pub n_records: i64,
    /// Seconds per data record.
    pub record_duration: f64,
    pub signals: Vec<SignalHeader>,
}

impl EdfHeader {
    pub fn n_signals(&self) -> usize {
        self.signals.len()
    }

    /// Sample count of one data record across all signals.
    pub fn record_samples(&self) -> usize {
        self.signals.iter().map(|s| s.samples_per_record).sum()
    }

    /// Sampling rate of a signal in Hz.
    pub fn sampling_rate(&self, signal: usize) -> f64 {
        self.signals[signal].samples_per_record as f64 / self.record_duration
    }

    /// Serializes the header to its ASCII form.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let ns = self.signals.len();
        let mut out = Vec::with_capacity(FIXED_HEADER + PER_SIGNAL * ns);
        put(&mut out, &self.version, 8)?;
        put(&mut out, &self.patient, 80)?;
        put(&mut out, &self.recording, 80)?;
        put(&mut out, &self.start_date, 8)?;
        put(&mut out, &self.start_time, 8)?;
        put(&mut out, &self.header_bytes.to_string(), 8)?;
        put(&mut out, &self.reserved, 44)?;
        put(&mut out, &self.n_records.to_string(), 8)?;
        put(&mut out, &format_number(self.record_duration), 8)?;
        put(&mut out, &ns.to_string(), 4)?;
        let sig = &self.signals;
        for s in sig {
            put(&mut out, &s.label, 16)?;
        }
        for s in sig {
            put(&mut out, &s.transducer, 80)?;
        }
        for s in sig {
            put(&mut out, &s.physical_dimension, 8)?;
        }
        for s in sig {
            put(&mut out, &format_number(s.physical_min), 8)?;
        }
        for s in sig {
            put(&mut out, &format_number(s.physical_max), 8)?;
        }
        for s in sig {
            put(&mut out, &s.digital_min.to_string(), 8)?;
        }
        for s in sig {
            put(&mut out, &s.digital_max.to_string(), 8)?;
        }
        for s in sig {
            put(&mut out, &s.prefiltering, 80)?;
        }
        for s in sig {
            put(&mut out, &s.samples_per_record.to_string(), 8)?;
        }
        for s in sig {
            put(&mut out, &s.reserved, 32)?;
        }
        Ok(out)
    }
}

fn put(out: &mut Vec<u8>, value: &str, width: usize) -> Result<()> {
    if !value.is_ascii() || value.len() > width {
        return Err(Error::MalformedHeader(format!(
            "field {value:?} is not ASCII of at most {width} bytes"
        )));
    }
    out.extend_from_slice(value.as_bytes());
    out.resize(out.len() + width - value.len(), b' ');
    Ok(())
}

fn format_number(x: f64) -> String {
    // Shortest representation that round-trips; integers print without a fraction.
    let s = format!("{x}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

struct Fields<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Fields<'a> {
    fn text(&mut self, width: usize, name: &str) -> Result<String> {
        let end = self.pos + width;
        let raw = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::MalformedHeader(format!("header ends inside field {name}")))?;
        self.pos = end;
        let s = std::str::from_utf8(raw)
            .map_err(|_| Error::MalformedHeader(format!("field {name} is not ASCII")))?;
        Ok(s.trim_end_matches([' ', '\0']).to_string())
    }

    fn number<T: std::str::FromStr>(&mut self, width: usize, name: &str) -> Result<T> {
        let s = self.text(width, name)?;
        s.trim()
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("field {name} is not numeric: {s:?}")))
    }
}

/// Parses the fixed and per-signal header.
pub fn parse_edf_header(bytes: &[u8]) -> Result<EdfHeader> {
    if bytes.len() < FIXED_HEADER {
        return Err(Error::MalformedHeader(format!(
            "{} bytes is shorter than the fixed {FIXED_HEADER}-byte header",
            bytes.len()
        )));
    }
    let mut f = Fields { bytes, pos: 0 };
    let version = f.text(8, "version")?;
    let patient = f.text(80, "patient")?;
    let recording = f.text(80, "recording")?;
    let start_date = f.text(8, "start date")?;
    let start_time = f.text(8, "start time")?;
    let header_bytes: usize = f.number(8, "header bytes")?;
    let reserved = f.text(44, "reserved")?;
    if reserved.starts_with("EDF+D") {
        return Err(Error::UnsupportedVariant("EDF+ with discontinuous records".into()));
    }
    let n_records: i64 = f.number(8, "number of records")?;
    let record_duration: f64 = f.number(8, "record duration")?;
    let ns: usize = f.number(4, "number of signals")?;
    if ns == 0 {
        return Err(Error::MalformedHeader("no signals".into()));
    }
    if !(record_duration > 0.0) {
        return Err(Error::MalformedHeader(format!(
            "record duration {record_duration} must be positive"
        )));
    }
    let expected = FIXED_HEADER + PER_SIGNAL * ns;
    if header_bytes != expected {
        return Err(Error::MalformedHeader(format!(
            "header length field {header_bytes} disagrees with {ns} signals ({expected})"
        )));
    }
    if bytes.len() < expected {
        return Err(Error::MalformedHeader(format!(
            "{} bytes is shorter than the {expected}-byte header for {ns} signals",
            bytes.len()
        )));
    }

    let texts = |f: &mut Fields, w: usize, name: &str| -> Result<Vec<String>> {
        (0..ns).map(|_| f.text(w, name)).collect()
    };
    let labels = texts(&mut f, 16, "label")?;
    let transducers = texts(&mut f, 80, "transducer")?;
    let dims = texts(&mut f, 8, "physical dimension")?;
    let pmin: Vec<f64> = (0..ns).map(|_| f.number(8, "physical minimum")).collect::<Result<_>>()?;
    let pmax: Vec<f64> = (0..ns).map(|_| f.number(8, "physical maximum")).collect::<Result<_>>()?;
    let dmin: Vec<i32> = (0..ns).map(|_| f.number(8, "digital minimum")).collect::<Result<_>>()?;
    let dmax: Vec<i32> = (0..ns).map(|_| f.number(8, "digital maximum")).collect::<Result<_>>()?;
    let prefilters = texts(&mut f, 80, "prefiltering")?;
    let spr: Vec<usize> = (0..ns).map(|_| f.number(8, "samples per record")).collect::<Result<_>>()?;
    let reserved_sig = texts(&mut f, 32, "signal reserved")?;

    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        if dmax[i] <= dmin[i] {
            return Err(Error::MalformedHeader(format!(
                "signal {}: digital maximum {} must exceed digital minimum {}",
                labels[i], dmax[i], dmin[i]
            )));
        }
        if pmax[i] == pmin[i] {
            return Err(Error::MalformedHeader(format!(
                "signal {}: physical minimum equals maximum",
                labels[i]
            )));
        }
        signals.push(SignalHeader {
            label: labels[i].clone(),
            transducer: transducers[i].clone(),
            physical_dimension: dims[i].clone(),
            physical_min: pmin[i],
            physical_max: pmax[i],
            digital_min: dmin[i],
            digital_max: dmax[i],
            prefiltering: prefilters[i].clone(),
            samples_per_record: spr[i],
            reserved: reserved_sig[i].clone(),
        });
    }

    Ok(EdfHeader {
        version,
        patient,
        recording,
        start_date,
        start_time,
        header_bytes,
        reserved,
        n_records,
        record_duration,
        signals,
    })
}

/// Decodes the data area into physical values.
///
/// With `channels = None` every non-annotation signal is returned in file order.
/// All returned signals must share one sampling rate.
pub fn read_edf_signals<S: AsRef<str>>(source: &[u8], channels: Option<&[S]>) -> Result<Recording> {
    let header = parse_edf_header(source)?;
    let data = &source[header.header_bytes..];
    let record_samples = header.record_samples();
    let record_bytes = 2 * record_samples;
    let n_records = if header.n_records >= 0 {
        header.n_records as usize
    } else {
        data.len() / record_bytes.max(1)
    };
    let expected = n_records * record_bytes;
    if data.len() < expected {
        return Err(Error::TruncatedData { expected, found: data.len() });
    }

    let selected: Vec<usize> = match channels {
        Some(labels) => labels
            .iter()
            .map(|l| {
                let l = l.as_ref();
                header
                    .signals
                    .iter()
                    .position(|s| !s.is_annotation() && s.label.eq_ignore_ascii_case(l))
                    .ok_or_else(|| Error::UnknownChannel(l.to_string()))
            })
            .collect::<Result<_>>()?,
        None => (0..header.n_signals()).filter(|&i| !header.signals[i].is_annotation()).collect(),
    };
    if selected.is_empty() {
        return Err(Error::MalformedHeader("no data signals".into()));
    }
    let fs = header.sampling_rate(selected[0]);
    if let Some(&odd) = selected.iter().find(|&&i| header.sampling_rate(i) != fs) {
        return Err(Error::UnsupportedVariant(format!(
            "signal {} sampled at {} Hz, expected {fs} Hz",
            header.signals[odd].label,
            header.sampling_rate(odd)
        )));
    }

    let mut offsets = Vec::with_capacity(header.n_signals());
    let mut acc = 0;
    for s in &header.signals {
        offsets.push(acc);
        acc += s.samples_per_record;
    }

    let spr = header.signals[selected[0]].samples_per_record;
    let n_samples = n_records * spr;
    let mut samples = Vec::with_capacity(selected.len() * n_samples);
    for &sig in &selected {
        let sh = &header.signals[sig];
        for r in 0..n_records {
            let start = r * record_bytes + 2 * offsets[sig];
            let chunk = &data[start..start + 2 * spr];
            samples.extend(
                chunk
                    .chunks_exact(2)
                    .map(|b| sh.to_physical(i16::from_le_bytes([b[0], b[1]]) as i32)),
            );
        }
    }
    let labels = selected.iter().map(|&i| header.signals[i].label.clone()).collect();
    Recording::from_flat(labels, fs, n_samples, samples)
}

/// Header a recording is written with: 1 s records, symmetric integer physical
/// range covering the data, full 16-bit digital range.
pub fn header_for(recording: &Recording, patient: &str, start_time: &str) -> Result<EdfHeader> {
    let fs = recording.fs();
    if fs.fract() != 0.0 {
        return Err(Error::UnsupportedVariant(format!(
            "sampling rate {fs} Hz is not a whole number of samples per 1 s record"
        )));
    }
    let spr = fs as usize;
    let n_records = recording.n_samples().div_ceil(spr);
    let signals = (0..recording.n_channels())
        .map(|c| {
            let peak = recording.channel(c).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let bound = peak.ceil() + 1.0;
            SignalHeader {
                label: recording.channel_labels()[c].clone(),
                transducer: String::new(),
                physical_dimension: "uV".into(),
                physical_min: -bound,
                physical_max: bound,
                digital_min: i16::MIN as i32,
                digital_max: i16::MAX as i32,
                prefiltering: String::new(),
                samples_per_record: spr,
                reserved: String::new(),
            }
        })
        .collect::<Vec<_>>();
    Ok(EdfHeader {
        version: "0".into(),
        patient: patient.into(),
        recording: "synthetic".into(),
        start_date: "01.01.00".into(),
        start_time: start_time.into(),
        header_bytes: FIXED_HEADER + PER_SIGNAL * signals.len(),
        reserved: String::new(),
        n_records: n_records as i64,
        record_duration: 1.0,
        signals,
    })
}

/// Encodes a recording as an EDF file. A trailing partial record is zero padded.
pub fn write_edf(recording: &Recording, patient: &str, start_time: &str) -> Result<Vec<u8>> {
    let header = header_for(recording, patient, start_time)?;
    let mut out = header.to_bytes()?;
    let spr = header.signals[0].samples_per_record;
    out.reserve(2 * header.n_records as usize * spr * header.n_signals());
    for r in 0..header.n_records as usize {
        for (c, sh) in header.signals.iter().enumerate() {
            let ch = recording.channel(c);
            for i in r * spr..(r + 1) * spr {
                let d = sh.to_digital(ch.get(i).copied().unwrap_or(0.0)) as i16;
                out.extend_from_slice(&d.to_le_bytes());
            }
        }
    }
    Ok(out)
}
