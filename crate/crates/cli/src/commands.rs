//! The pipeline commands. Each writes its outputs atomically under an output
//! directory, finishing with a `run-<command>.json` manifest, and reports
//! progress to `log`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use seizure_core::ingest::{
    generate_synthetic_recording, parse_chbmit_summary, read_edf_signals, write_chbmit_summary, write_edf,
    place_files, Recording, SeizureAnnotation, SummaryEntry, Timeline,
};
use seizure_core::net::{run_gradcheck, ModelConfig, write_checkpoint, CheckpointManifest, GradcheckOptions, GradcheckReport};
use seizure_core::segment::cache::{write_atomic, MANIFEST_FILE, SAMPLES_FILE};
use seizure_core::segment::{build_dataset, read_cache, select_leading_seizures, write_cache, Dataset};
use seizure_core::train::{
    box_stats, fold_csv, loocv_with, mean, train_fold, BoxStats, FoldOutcome, FoldReport, LoocvResult,
    FOLD_CSV_HEADER,
};

use crate::config::{PipelineConfig, Source};
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;

pub const SYNTH_DIR: &str = "synth";
pub const SYNTH_SUMMARY: &str = "synth-summary.txt";
pub const SYNTH_CONFIG: &str = "pipeline.toml";
pub const DATASET_DIR: &str = "dataset";
pub const DATA_KEY_FILE: &str = "data-key.txt";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FOLDS_CSV: &str = "folds.csv";
pub const AGGREGATE_JSON: &str = "aggregate.json";
pub const GRADCHECK_JSON: &str = "gradcheck.json";
pub const REPORT_CSV: &str = "report.csv";

/// Length of each synthetic EDF file.
pub const SYNTH_FILE_SECONDS: f64 = 1800.0;

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec_pretty(value).map_err(seizure_core::Error::from)?)
}

fn say(log: &mut dyn Write, line: std::fmt::Arguments) {
    let _ = log.write_fmt(line);
    let _ = log.write_all(b"\n");
}

fn start(cfg: &PipelineConfig, command: &str) -> RunManifest {
    RunManifest::start(command, Some(cfg.hash()), Some(cfg.seeds))
}

/// File boundaries: every `SYNTH_FILE_SECONDS`, pushed past any seizure they would cut.
fn chunk_bounds(duration: f64, seizures: &[SeizureAnnotation]) -> Vec<(f64, f64)> {
    let mut bounds = Vec::new();
    let mut t = 0.0;
    while t < duration {
        let mut end = (t + SYNTH_FILE_SECONDS).min(duration);
        if let Some(s) = seizures.iter().find(|s| s.onset < end && end < s.end) {
            end = s.end.ceil().min(duration);
        }
        bounds.push((t, end));
        t = end;
    }
    bounds
}

/// Writes the synthetic recording as EDF files with a CHB-MIT style summary
/// and an EDF-source config for them. Returns the directory written.
pub fn make_synth(cfg: &PipelineConfig, out: &Path, log: &mut dyn Write) -> Result<PathBuf> {
    let spec = cfg
        .synthetic_spec()
        .ok_or_else(|| CliError::Config("make-synth needs a [source.synthetic] section".into()))?;
    let mut run = start(cfg, "make-synth");
    let dir = out.join(SYNTH_DIR);
    create_dir(&dir)?;
    let (rec, seizures) = generate_synthetic_recording(&spec)?;
    let fs_hz = rec.fs();
    let labels = rec.channel_labels().to_vec();

    let mut entries = Vec::new();
    let mut files = Vec::new();
    for (i, (lo, hi)) in chunk_bounds(rec.duration(), &seizures).into_iter().enumerate() {
        let (a, b) = ((lo * fs_hz).round() as usize, ((hi * fs_hz).round() as usize).min(rec.n_samples()));
        let chunk = Recording::new(labels.clone(), fs_hz, (0..labels.len()).map(|c| rec.channel(c)[a..b].to_vec()).collect())?;
        let name = format!("synth_{:02}.edf", i + 1);
        let clock = lo.round() as u64;
        let start_time = format!("{:02}.{:02}.{:02}", (clock / 3600) % 24, (clock / 60) % 60, clock % 60);
        let path = dir.join(&name);
        write_atomic(&path, &write_edf(&chunk, "SYNTH", &start_time)?)?;
        let file_seizures = seizures
            .iter()
            .filter(|s| s.onset >= lo && s.onset < hi)
            .map(|s| SeizureAnnotation { onset: s.onset - lo, end: s.end - lo, ..*s })
            .collect();
        entries.push(SummaryEntry { file_name: name, start_clock: Some(lo), end_clock: Some(hi), seizures: file_seizures });
        files.push(path);
    }
    let summary = dir.join(SYNTH_SUMMARY);
    write_atomic(&summary, write_chbmit_summary(fs_hz, &labels, &entries).as_bytes())?;
    files.push(summary);

    let config = dir.join(SYNTH_CONFIG);
    write_atomic(&config, edf_config_for(cfg, &labels)?.as_bytes())?;
    files.push(config);

    for f in &files {
        run.output(out, f)?;
    }
    run.finish(out)?;
    say(log, format_args!("wrote {} EDF files with {} seizures to {}", entries.len(), seizures.len(), dir.display()));
    Ok(dir)
}

/// A config reading the written EDF files with the synthetic run's settings.
fn edf_config_for(cfg: &PipelineConfig, labels: &[String]) -> Result<String> {
    let edf = PipelineConfig {
        out_dir: PathBuf::from("out"),
        montage: Some(labels.to_vec()),
        source: Source::Edf(crate::config::EdfSource { dir: ".".into(), summary: SYNTH_SUMMARY.into() }),
        ..cfg.clone()
    };
    let mut table = toml::Table::try_from(&edf).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(toml::Value::Table(train)) = table.get_mut("train") {
        train.remove("seed");
    }
    toml::to_string(&table).map_err(|e| CliError::Config(e.to_string()))
}

/// Recordings on one time axis, plus the files read.
pub fn load_timeline(cfg: &PipelineConfig) -> Result<(Timeline, Vec<PathBuf>)> {
    let montage = cfg.montage();
    match &cfg.source {
        Source::Synthetic(_) => {
            let spec = cfg.synthetic_spec().expect("synthetic source");
            let (mut rec, ann) = generate_synthetic_recording(&spec)?;
            if let Some(m) = &montage {
                rec = rec.select(m)?;
            }
            Ok((Timeline::single(rec, ann)?, Vec::new()))
        }
        Source::Edf(src) => {
            let text = fs::read_to_string(&src.summary).map_err(|e| CliError::io(&src.summary, e))?;
            let entries = parse_chbmit_summary(&text).map_err(|e| e.in_file(&src.summary))?;
            let mut inputs = vec![src.summary.clone()];
            let mut files = Vec::with_capacity(entries.len());
            for entry in entries {
                let path = src.dir.join(&entry.file_name);
                let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
                let rec = read_edf_signals(&bytes, montage.as_deref()).map_err(|e| e.in_file(&path))?;
                files.push((entry, rec));
                inputs.push(path);
            }
            Ok((Timeline::assemble(files)?, inputs))
        }
    }
}

/// Seizures of a CHB-MIT summary on one time axis and the leading ones among
/// them, without reading any EDF file. File lengths come from the summary's
/// start and end clocks.
pub fn summary_seizures(text: &str, seizure_free: f64) -> Result<(Vec<SeizureAnnotation>, Vec<usize>)> {
    let entries = parse_chbmit_summary(text)?;
    let durations = entries
        .iter()
        .map(|e| {
            e.clock_duration()
                .ok_or_else(|| CliError::Config(format!("{} has no start and end clock", e.file_name)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (_, seizures) = place_files(&entries, &durations);
    let leading = select_leading_seizures(&seizures, seizure_free);
    Ok((seizures, leading))
}

fn dataset_dir(out: &Path) -> PathBuf {
    out.join(DATASET_DIR)
}

/// Builds the dataset and writes its cache.
pub fn preprocess(cfg: &PipelineConfig, out: &Path, log: &mut dyn Write) -> Result<Dataset> {
    let mut run = start(cfg, "preprocess");
    let (timeline, inputs) = load_timeline(cfg)?;
    let dataset = build_dataset(&timeline, &cfg.timing, &cfg.stft, &cfg.dataset)?;
    let dir = dataset_dir(out);
    write_cache(&dir, &dataset)?;
    write_atomic(&dir.join(DATA_KEY_FILE), cfg.data_key().as_bytes())?;
    for f in &inputs {
        run.input(out, f)?;
    }
    for name in [MANIFEST_FILE, SAMPLES_FILE, DATA_KEY_FILE] {
        run.output(out, &dir.join(name))?;
    }
    run.finish(out)?;

    let counts = dataset.counts();
    say(log, format_args!("sample shape {:?}", dataset.shape));
    say(log, format_args!("seizures {}, leading {:?}, excluded {:?}", timeline.annotations().len(), dataset.leading, dataset.excluded));
    say(log, format_args!("preictal {} interictal {}", counts.preictal, counts.interictal));
    for k in dataset.fold_keys() {
        let n = dataset.samples.iter().filter(|s| s.fold_key == Some(k)).count();
        say(log, format_args!("  seizure {k}: {n} preictal windows"));
    }
    Ok(dataset)
}

/// The cached dataset when it was built from the same inputs, else a fresh build.
pub fn dataset_for(cfg: &PipelineConfig, out: &Path, log: &mut dyn Write) -> Result<Dataset> {
    let dir = dataset_dir(out);
    if fs::read_to_string(dir.join(DATA_KEY_FILE)).is_ok_and(|k| k == cfg.data_key()) {
        if let Ok(d) = read_cache(&dir) {
            say(log, format_args!("using cached dataset in {}", dir.display()));
            return Ok(d);
        }
    }
    preprocess(cfg, out, log)
}

fn save_fold(model: &ModelConfig, out: &Path, outcome: &FoldOutcome, run: &mut RunManifest) -> Result<()> {
    let dir = out.join(CHECKPOINT_DIR);
    let stem = format!("fold_{}", outcome.report.fold_key);
    let mut manifest = CheckpointManifest::new(*model, outcome.report.epochs_run, &outcome.params);
    manifest.normalization = Some(outcome.normalization.clone());
    manifest.metrics = Some(serde_json::to_value(&outcome.report).map_err(seizure_core::Error::from)?);
    write_checkpoint(&dir, &stem, &manifest, &outcome.params)?;
    run.output(out, &dir.join(format!("{stem}.json")))?;
    run.output(out, &dir.join(format!("{stem}.params")))?;
    Ok(())
}

fn print_report(log: &mut dyn Write, r: &FoldReport) {
    let c = &r.counts;
    say(
        log,
        format_args!(
            "fold {}: acc {:.4} tpr {:.4} tnr {:.4} (tp {} fn {} tn {} fp {}) loss {}",
            r.fold_key,
            r.acc,
            r.tpr,
            r.tnr,
            c.tp,
            c.fn_,
            c.tn,
            c.fp,
            r.final_loss.map_or("-".into(), |l| format!("{l:.4}"))
        ),
    );
}

/// Trains and evaluates one fold, saving its checkpoint.
pub fn train(cfg: &PipelineConfig, out: &Path, fold: usize, log: &mut dyn Write) -> Result<FoldReport> {
    let dataset = dataset_for(cfg, out, log)?;
    let mut run = start(cfg, &format!("train-fold-{fold}"));
    let model = cfg.model_config(dataset.shape);
    let outcome = train_fold(&dataset, fold, &model, &cfg.train_config())?;
    save_fold(&model, out, &outcome, &mut run)?;
    run.finish(out)?;
    print_report(log, &outcome.report);
    Ok(outcome.report)
}

/// Leave-one-seizure-out over every leading seizure.
pub fn crossval(cfg: &PipelineConfig, out: &Path, log: &mut dyn Write) -> Result<LoocvResult> {
    let dataset = dataset_for(cfg, out, log)?;
    let mut run = start(cfg, "crossval");
    for name in [MANIFEST_FILE, SAMPLES_FILE] {
        run.input(out, &dataset_dir(out).join(name)).ok();
    }
    let model = cfg.model_config(dataset.shape);
    let result = loocv_with(&dataset, &model, &cfg.train_config(), |outcome| {
        print_report(log, &outcome.report);
        save_fold(&model, out, outcome, &mut run).map_err(|e| match e {
            CliError::Core(e) => e,
            other => seizure_core::Error::InvalidConfig(other.to_string()),
        })
    })?;
    let csv = out.join(FOLDS_CSV);
    write_atomic(&csv, fold_csv(&result.folds).as_bytes())?;
    let agg = out.join(AGGREGATE_JSON);
    write_atomic(&agg, &json_bytes(&result.aggregate)?)?;
    run.output(out, &csv)?;
    run.output(out, &agg)?;
    run.finish(out)?;
    let m = result.aggregate.mean;
    say(log, format_args!("ACC {:.3}  TPR {:.3}  TNR {:.3}  ({} folds)", m.acc, m.tpr, m.tnr, result.aggregate.n_folds));
    Ok(result)
}

/// Finite-difference checks; fails with a verification error when any row fails.
pub fn gradcheck(opts: &GradcheckOptions, out: Option<&Path>, log: &mut dyn Write) -> Result<GradcheckReport> {
    let report = run_gradcheck(opts)?;
    say(log, format_args!("{:<6} {:>6} {:>9} {:>14}  result", "layer", "cases", "partials", "worst rel err"));
    for r in &report.rows {
        say(
            log,
            format_args!(
                "{:<6} {:>6} {:>9} {:>14.3e}  {}",
                r.layer,
                r.cases,
                r.partials,
                r.worst_rel_error,
                if r.passed { "ok" } else { "FAIL" }
            ),
        );
    }
    if let Some(out) = out {
        create_dir(out)?;
        let mut run = RunManifest::start("gradcheck", None, None);
        let path = out.join(GRADCHECK_JSON);
        write_atomic(&path, &json_bytes(&report)?)?;
        run.output(out, &path)?;
        run.finish(out)?;
    }
    if report.passed() {
        Ok(report)
    } else {
        let failed: Vec<&str> = report.rows.iter().filter(|r| !r.passed).map(|r| r.layer).collect();
        Err(CliError::Verification(format!("tolerance {:e} exceeded in {}", report.tolerance, failed.join(", "))))
    }
}

/// One fold CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub fold_key: usize,
    pub acc: f64,
    pub tpr: f64,
    pub tnr: f64,
}

impl FoldRow {
    fn get(&self, metric: &str) -> f64 {
        match metric {
            "acc" => self.acc,
            "tpr" => self.tpr,
            _ => self.tnr,
        }
    }
}

pub fn read_fold_csv(path: &Path) -> Result<Vec<FoldRow>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |line: usize, m: &str| seizure_core::Error::Parse { line, message: m.into() }.in_file(path);
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == FOLD_CSV_HEADER => {}
        _ => return Err(bad(1, "unexpected header").into()),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(bad(i + 1, "expected 6 fields").into());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "not a number"));
            Ok(FoldRow {
                fold_key: f[0].parse().map_err(|_| bad(i + 1, "bad fold key"))?,
                acc: num(f[1])?,
                tpr: num(f[2])?,
                tnr: num(f[3])?,
            })
        })
        .collect()
}

/// Box statistics of one metric of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run: String,
    pub metric: String,
    pub n_folds: usize,
    pub mean: f64,
    pub stats: BoxStats,
}

pub const REPORT_HEADER: &str = "run,metric,n_folds,mean,min,q1,median,q3,max";

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        let s = &r.stats;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.run, r.metric, r.n_folds, r.mean, s.min, s.q1, s.median, s.q3, s.max
        ));
    }
    out
}

/// Merges the fold CSVs of several crossval output directories into one table,
/// ordered by run name (the directory's final component).
pub fn report(runs: &[PathBuf], out: Option<&Path>, log: &mut dyn Write) -> Result<Vec<ReportRow>> {
    let mut by_name = BTreeMap::new();
    for dir in runs {
        let csv = dir.join(FOLDS_CSV);
        if !csv.is_file() {
            return Err(CliError::MissingRun(dir.clone()));
        }
        let name = dir
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| dir.display().to_string());
        if by_name.insert(name.clone(), read_fold_csv(&csv)?).is_some() {
            return Err(CliError::Config(format!("two runs named {name}")));
        }
    }
    let mut rows = Vec::new();
    for (run, folds) in &by_name {
        for metric in ["acc", "tpr", "tnr"] {
            let values: Vec<f64> = folds.iter().map(|r| r.get(metric)).collect();
            let Some(stats) = box_stats(&values) else { continue };
            rows.push(ReportRow { run: run.clone(), metric: metric.into(), n_folds: values.len(), mean: mean(&values), stats });
        }
    }
    let csv = report_csv(&rows);
    let _ = log.write_all(csv.as_bytes());
    if let Some(out) = out {
        create_dir(out)?;
        let mut run = RunManifest::start("report", None, None);
        for dir in runs {
            run.input(out, &dir.join(FOLDS_CSV))?;
        }
        let path = out.join(REPORT_CSV);
        write_atomic(&path, csv.as_bytes())?;
        run.output(out, &path)?;
        run.finish(out)?;
    }
    Ok(rows)
}
