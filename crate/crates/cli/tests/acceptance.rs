//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Criterion 9 needs CHB-MIT subject chb01. Point `CHBMIT_DIR` at a directory
//! holding `chb01/chb01-summary.txt` (or the summary itself); otherwise it is
//! skipped.

use std::f64::consts::TAU;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seizure_cli::commands;
use seizure_cli::PipelineConfig;
use seizure_core::ingest::SeizureAnnotation;
use seizure_core::net::{
    conv3d_forward, init_params, model_forward, ConvSpec, GradcheckOptions, ModelConfig, Padding, Tensor4,
};
use seizure_core::segment::{
    label_intervals, select_leading_seizures, slide_windows, stft_featurize, Label, LabeledInterval,
    MagnitudeTransform, StftConfig, TimingPolicy,
};
use seizure_core::train::{metrics, ConfusionCounts};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn sink() -> Vec<u8> {
    Vec::new()
}

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

// 1 -------------------------------------------------------------------------

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let result = commands::gradcheck(&GradcheckOptions::default(), None, &mut sink());
    let elapsed = start.elapsed();
    match result {
        Ok(report) => {
            let layers: Vec<&str> = report.rows.iter().map(|r| r.layer).collect();
            let worst = report.rows.iter().map(|r| r.worst_rel_error).fold(0.0, f64::max);
            let all = ["conv", "relu", "pool", "gap", "dense", "model"].iter().all(|l| layers.contains(l));
            verdict(
                all && worst < 1e-4 && elapsed < Duration::from_secs(60),
                format!("rows {layers:?}, worst rel err {worst:.2e} < 1e-4, {:.2} s < 60 s", elapsed.as_secs_f64()),
            )
        }
        Err(e) => Fail(e.to_string()),
    }
}

// 2 -------------------------------------------------------------------------

const MODEL_DILATIONS: [[usize; 3]; 4] = [[1, 1, 3], [1, 1, 5], [3, 1, 3], [3, 1, 5]];

/// Zero-pads explicitly, then sums over every tap.
fn brute_force_conv(x: &Tensor4, spec: &ConvSpec, w: &[f64], b: &[f64]) -> ([usize; 3], Vec<f64>) {
    let [ni, c, f, t] = x.shape();
    let dims = [c, f, t];
    let reach = |a: usize| (spec.kernel[a] - 1) * spec.dilation[a];
    let before = [0, 1, 2].map(|a| if spec.padding == Padding::Same { reach(a) / 2 } else { 0 });
    let padded_len = [0, 1, 2].map(|a| if spec.padding == Padding::Same { dims[a] + reach(a) } else { dims[a] });
    let mut padded = vec![0.0; ni * padded_len.iter().product::<usize>()];
    let pidx = |i: usize, p: [usize; 3]| ((i * padded_len[0] + p[0]) * padded_len[1] + p[1]) * padded_len[2] + p[2];
    for i in 0..ni {
        for cc in 0..c {
            for ff in 0..f {
                for tt in 0..t {
                    padded[pidx(i, [cc + before[0], ff + before[1], tt + before[2]])] = x.get(i, cc, ff, tt);
                }
            }
        }
    }
    let out = [0, 1, 2].map(|a| padded_len[a] - reach(a));
    let mut y = Vec::with_capacity(spec.n_filters * out.iter().product::<usize>());
    let [kc, kf, kt] = spec.kernel;
    for m in 0..spec.n_filters {
        for oc in 0..out[0] {
            for of in 0..out[1] {
                for ot in 0..out[2] {
                    let mut acc = b[m];
                    for i in 0..ni {
                        for a in 0..kc {
                            for bb in 0..kf {
                                for k in 0..kt {
                                    let p = [oc + a * spec.dilation[0], of + bb * spec.dilation[1], ot + k * spec.dilation[2]];
                                    acc += w[(((m * ni + i) * kc + a) * kf + bb) * kt + k] * padded[pidx(i, p)];
                                }
                            }
                        }
                    }
                    y.push(acc);
                }
            }
        }
    }
    (out, y)
}

fn random_conv(rng: &mut ChaCha8Rng, dilation: [usize; 3], kernel: Option<[usize; 3]>) -> (Tensor4, ConvSpec, Vec<f64>, Vec<f64>) {
    let in_maps = rng.random_range(1..=3);
    let spatial = [rng.random_range(1..=6), rng.random_range(2..=9), rng.random_range(3..=14)];
    let mut spec = ConvSpec {
        kernel: kernel.unwrap_or_else(|| [0, 1, 2].map(|_| rng.random_range(1..=3))),
        dilation,
        n_filters: rng.random_range(1..=3),
        in_maps,
        padding: if rng.random_bool(0.5) { Padding::Same } else { Padding::Valid },
    };
    if spec.geometry(spatial).is_err() {
        spec.padding = Padding::Same;
    }
    let x = Tensor4::from_vec([in_maps, spatial[0], spatial[1], spatial[2]], uniform(rng, in_maps * spatial.iter().product::<usize>()))
        .unwrap();
    let w = uniform(rng, spec.weight_len());
    let b = uniform(rng, spec.n_filters);
    (x, spec, w, b)
}

fn conv_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut seen = [0usize; 4];
    let cases = 120;
    for i in 0..cases {
        let dilation = if i % 2 == 0 {
            seen[(i / 2) % 4] += 1;
            MODEL_DILATIONS[(i / 2) % 4]
        } else {
            [0, 1, 2].map(|_| rng.random_range(1..=5))
        };
        let (x, spec, w, b) = random_conv(&mut rng, dilation, None);
        let got = conv3d_forward(&x, &spec, &w, &b).unwrap();
        let (shape, want) = brute_force_conv(&x, &spec, &w, &b);
        if got.spatial() != shape {
            return Fail(format!("{spec:?}: shape {:?} vs {shape:?}", got.spatial()));
        }
        worst = got.data().iter().zip(&want).map(|(g, w)| (g - w).abs()).fold(worst, f64::max);
    }
    verdict(
        worst <= 1e-10 && seen.iter().all(|&n| n > 0),
        format!("{cases} cases, model dilations hit {seen:?} times, worst abs err {worst:.2e} <= 1e-10"),
    )
}

// 3 -------------------------------------------------------------------------

/// Undilated cross-correlation over a zero-extended input.
fn standard_conv(x: &Tensor4, kernel: [usize; 3], same: bool, n_filters: usize, w: &[f64], b: &[f64]) -> Vec<f64> {
    let [ni, c, f, t] = x.shape();
    let dims = [c as isize, f as isize, t as isize];
    let lead = [0, 1, 2].map(|a| if same { ((kernel[a] - 1) / 2) as isize } else { 0 });
    let out = [0, 1, 2].map(|a| if same { dims[a] } else { dims[a] - kernel[a] as isize + 1 });
    let at = |i: usize, p: [isize; 3]| {
        if (0..3).all(|a| p[a] >= 0 && p[a] < dims[a]) {
            x.get(i, p[0] as usize, p[1] as usize, p[2] as usize)
        } else {
            0.0
        }
    };
    let mut y = Vec::new();
    for m in 0..n_filters {
        for oc in 0..out[0] {
            for of in 0..out[1] {
                for ot in 0..out[2] {
                    let mut acc = b[m];
                    let mut wi = m * ni * kernel.iter().product::<usize>();
                    for i in 0..ni {
                        for a in 0..kernel[0] as isize {
                            for bb in 0..kernel[1] as isize {
                                for k in 0..kernel[2] as isize {
                                    acc += w[wi] * at(i, [oc + a - lead[0], of + bb - lead[1], ot + k - lead[2]]);
                                    wi += 1;
                                }
                            }
                        }
                    }
                    y.push(acc);
                }
            }
        }
    }
    y
}

fn dilation_one() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    let cases = 60;
    for _ in 0..cases {
        let (x, spec, w, b) = random_conv(&mut rng, [1, 1, 1], None);
        let got = conv3d_forward(&x, &spec, &w, &b).unwrap();
        let want = standard_conv(&x, spec.kernel, spec.padding == Padding::Same, spec.n_filters, &w, &b);
        if got.data().len() != want.len() {
            return Fail(format!("{spec:?}: {} outputs vs {}", got.data().len(), want.len()));
        }
        worst = got.data().iter().zip(&want).map(|(g, w)| (g - w).abs()).fold(worst, f64::max);
    }
    verdict(worst <= 1e-12, format!("{cases} cases, worst abs err {worst:.2e} <= 1e-12"))
}

// 4 -------------------------------------------------------------------------

fn dft_magnitude(frame: &[f64], k: usize) -> f64 {
    let n = frame.len();
    let (mut re, mut im) = (0.0, 0.0);
    for (i, v) in frame.iter().enumerate() {
        let hann = 0.5 * (1.0 - (TAU * i as f64 / n as f64).cos());
        let angle = TAU * ((k * i) % n) as f64 / n as f64;
        re += v * hann * angle.cos();
        im -= v * hann * angle.sin();
    }
    (re * re + im * im).sqrt()
}

fn stft_oracle() -> Outcome {
    let fs = 256.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let len = (30.0 * fs) as usize;
    let channel = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let (f1, f2) = (rng.random_range(1.0..100.0), rng.random_range(1.0..100.0));
        (0..len)
            .map(|i| {
                let t = i as f64 / fs;
                20.0 * (TAU * f1 * t).sin() + 5.0 * (TAU * f2 * t).cos() + rng.random_range(-10.0..10.0)
            })
            .collect()
    };
    let x: Vec<Vec<f64>> = (0..18).map(|_| channel(&mut rng)).collect();
    let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
    let shape = stft_featurize(&refs, &StftConfig::default()).unwrap().shape;

    let linear = StftConfig { magnitude_transform: MagnitudeTransform::Linear, ..StftConfig::default() };
    let s = stft_featurize(&refs[..2], &linear).unwrap();
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for c in 0..2 {
        for t in 0..59 {
            let frame = &x[c][t * 128..t * 128 + 256];
            for f in 0..128 {
                let want = dft_magnitude(frame, f + 1);
                // relative to the magnitude, floored at 1e-3 for near-empty bins
                worst = worst.max((s.at(c, f, t) - want).abs() / want.max(1e-3));
                compared += 1;
            }
        }
    }
    verdict(
        shape == [18, 128, 59] && worst <= 1e-8,
        format!("shape {shape:?} == [18, 128, 59], {compared} magnitudes, worst rel err {worst:.2e} <= 1e-8"),
    )
}

// 5 -------------------------------------------------------------------------

fn shape_law() -> Outcome {
    let cfg = ModelConfig { input_shape: [18, 128, 59], n_filters: 16, seed: 1 };
    let expected = [[16, 18, 64, 29], [16, 9, 32, 14], [16, 4, 16, 7]];
    // same padding keeps the size, pooling floors
    let mut walk = [18usize, 128, 59];
    let mut derived = Vec::new();
    for pool in [[1, 2, 2], [2, 2, 2], [2, 2, 2]] {
        walk = [0, 1, 2].map(|a| walk[a] / pool[a]);
        derived.push([16, walk[0], walk[1], walk[2]]);
    }
    let shapes = cfg.layer_shapes().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = Tensor4::from_vec([1, 18, 128, 59], uniform(&mut rng, 18 * 128 * 59)).unwrap();
    let (probs, cache) = model_forward(&init_params(&cfg), &cfg, &x).unwrap();
    let ok = shapes == expected
        && derived == expected
        && cfg.feature_len() == 64
        && cache.features.len() == 64
        && probs.len() == 2;
    verdict(ok, format!("layers {shapes:?}, feature vector {}", cache.features.len()))
}

// 6 -------------------------------------------------------------------------

fn seizure(i: usize, onset_h: f64) -> SeizureAnnotation {
    SeizureAnnotation { seizure_index: i, onset: onset_h * 3600.0, end: onset_h * 3600.0 + 60.0 }
}

fn timing_rules() -> Outcome {
    let policy = TimingPolicy::default();
    let interval = LabeledInterval { start: 0.0, end: 1800.0, label: Label::Preictal, source_seizure: Some(0) };
    let windows = slide_windows(&interval, &policy, 256.0).len();

    let onset = 50_000.0;
    let ann = [SeizureAnnotation { seizure_index: 0, onset, end: onset + 60.0 }];
    let outcome = label_intervals(&ann, &[0], &policy, &[(0.0, 100_000.0)]);
    let span: Vec<(f64, f64)> =
        outcome.intervals.iter().filter(|i| i.label == Label::Preictal).map(|i| (i.start, i.end)).collect();

    // seizure 1 falls 1 h after seizure 0; 2 and 3 follow 6 h gaps
    let four = [seizure(0, 2.0), seizure(1, 3.0), seizure(2, 9.0), seizure(3, 15.0)];
    let leading = select_leading_seizures(&four, policy.seizure_free);
    let ok = windows == 81 && span == [(onset - 2100.0, onset - 300.0)] && leading == [0, 2, 3];
    verdict(ok, format!("{windows} windows, preictal span {span:?} for onset {onset}, leading {leading:?}"))
}

// 7, 8 ----------------------------------------------------------------------

fn synthetic_config() -> PipelineConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/synthetic.toml");
    PipelineConfig::load(&path).unwrap()
}

fn crossval_criteria() -> (Outcome, Outcome) {
    let cfg = synthetic_config();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let start = Instant::now();
    let first = match commands::crossval(&cfg, a.path(), &mut sink()) {
        Ok(r) => r,
        Err(e) => return (Fail(e.to_string()), Fail("first run failed".into())),
    };
    let elapsed = start.elapsed();
    let m = first.aggregate.mean;
    let seven = verdict(
        first.aggregate.n_folds == 3 && m.acc >= 0.9 && m.tpr >= 0.9 && elapsed < Duration::from_secs(600),
        format!(
            "{} folds, mean acc {:.3} >= 0.9, mean tpr {:.3} >= 0.9, {:.0} s < 600 s",
            first.aggregate.n_folds,
            m.acc,
            m.tpr,
            elapsed.as_secs_f64()
        ),
    );
    let eight = match commands::crossval(&cfg, b.path(), &mut sink()) {
        Ok(_) => {
            let read = |d: &Path| fs::read(d.join(commands::FOLDS_CSV)).unwrap();
            let (x, y) = (read(a.path()), read(b.path()));
            verdict(x == y, format!("fold CSVs of two runs: {} and {} bytes, identical: {}", x.len(), y.len(), x == y))
        }
        Err(e) => Fail(e.to_string()),
    };
    (seven, eight)
}

// 9 -------------------------------------------------------------------------

fn chb01_summary() -> Option<PathBuf> {
    let root = PathBuf::from(std::env::var_os("CHBMIT_DIR")?);
    [root.join("chb01").join("chb01-summary.txt"), root.join("chb01-summary.txt")].into_iter().find(|p| p.is_file())
}

fn chb01() -> Outcome {
    let Some(path) = chb01_summary() else {
        return Skip("CHB-MIT chb01 not found (set CHBMIT_DIR)".into());
    };
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return Fail(format!("{}: {e}", path.display())),
    };
    match commands::summary_seizures(&text, TimingPolicy::default().seizure_free) {
        Ok((seizures, leading)) => verdict(
            seizures.len() == 7 && leading.len() == 3,
            format!("{} seizures / {} leading {leading:?} (want 7/3)", seizures.len(), leading.len()),
        ),
        Err(e) => Fail(e.to_string()),
    }
}

// 10 ------------------------------------------------------------------------

fn metric_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut exact = 0;
    let mut worst_balanced: f64 = 0.0;
    for _ in 0..1000 {
        let c = ConfusionCounts {
            tp: rng.random_range(0..1000),
            fn_: rng.random_range(1..1000),
            tn: rng.random_range(0..1000),
            fp: rng.random_range(1..1000),
        };
        let m = metrics(&c).unwrap();
        if m.acc == (c.tp + c.tn) as f64 / (c.tp + c.fn_ + c.tn + c.fp) as f64 {
            exact += 1;
        }
        let positives = rng.random_range(1..5000u64);
        let tp = rng.random_range(0..=positives);
        let tn = rng.random_range(0..=positives);
        let b = ConfusionCounts { tp, fn_: positives - tp, tn, fp: positives - tn };
        let m = metrics(&b).unwrap();
        worst_balanced = worst_balanced.max((m.acc - (m.tpr + m.tnr) / 2.0).abs());
    }
    verdict(
        exact == 1000 && worst_balanced <= 1e-12,
        format!("acc exact on {exact}/1000, balanced |acc - (tpr+tnr)/2| <= {worst_balanced:.1e} (<= 1e-12)"),
    )
}

// ---------------------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Fail(format!("panicked: {msg}"))
    })
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "gradient suite", guarded(gradient_suite)),
        (2, "convolution oracle", guarded(conv_oracle)),
        (3, "dilation-1 equivalence", guarded(dilation_one)),
        (4, "STFT oracle", guarded(stft_oracle)),
        (5, "shape law", guarded(shape_law)),
        (6, "timing rules", guarded(timing_rules)),
    ];
    let (seven, eight) = catch_unwind(crossval_criteria).unwrap_or_else(|_| (Fail("panicked".into()), Fail("panicked".into())));
    results.push((7, "synthetic LOOCV", seven));
    results.push((8, "determinism", eight));
    results.push((9, "chb01 seizure counts", guarded(chb01)));
    results.push((10, "metric identities", guarded(metric_identities)));

    let mut failed = 0;
    for (n, name, outcome) in &results {
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("criterion {n:>2} {tag} {name}: {detail}");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
