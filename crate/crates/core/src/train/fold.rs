//! One cross-validation fold: split, train, evaluate.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{init_params, model_backward, model_forward, ModelConfig, ModelParams, Tensor4};
use crate::par;
use crate::segment::{BinStandardizer, Dataset, Label, SpectralSample};

use super::{adam_step, balance_undersample, metrics, AdamState, ConfusionCounts, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold_key: usize,
    pub counts: ConfusionCounts,
    pub acc: f64,
    pub tpr: f64,
    pub tnr: f64,
    pub epochs_run: usize,
    /// Mean training loss of the last epoch; `None` when no epoch ran.
    pub final_loss: Option<f64>,
}

/// Indices into `Dataset::samples`, each list in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainTrace {
    pub epoch_loss: Vec<f64>,
    /// Dataset indices of every minibatch, in update order.
    pub batches: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub report: FoldReport,
    pub params: ModelParams,
    pub normalization: BinStandardizer,
    pub split: FoldSplit,
    pub trace: TrainTrace,
}

fn canonical(a: &SpectralSample, b: &SpectralSample) -> Ordering {
    (a.label, a.fold_key).cmp(&(b.label, b.fold_key)).then(a.origin.total_cmp(&b.origin))
}

/// Test set: the preictal windows of `fold_key` plus as many interictal
/// windows, those nearest in time to the test preictal span. Interictal
/// windows overlapping any test window are kept out of training.
pub fn split_fold(dataset: &Dataset, fold_key: usize) -> Result<FoldSplit> {
    let samples = &dataset.samples;
    let wl = dataset.policy.window_len;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| canonical(&samples[a], &samples[b]));

    let is_test_pre = |s: &SpectralSample| s.label == Label::Preictal && s.fold_key == Some(fold_key);
    let test_pre: Vec<usize> = order.iter().copied().filter(|&i| is_test_pre(&samples[i])).collect();
    if test_pre.is_empty() {
        return Err(Error::NoTestSamples(fold_key));
    }
    let lo = test_pre.iter().map(|&i| samples[i].origin).fold(f64::INFINITY, f64::min);
    let hi = test_pre.iter().map(|&i| samples[i].origin).fold(f64::NEG_INFINITY, f64::max) + wl;

    let mut inter: Vec<usize> = order.iter().copied().filter(|&i| samples[i].label == Label::Interictal).collect();
    if inter.is_empty() {
        return Err(Error::NoTestSamples(fold_key));
    }
    let distance = |i: usize| {
        let o = samples[i].origin;
        (lo - (o + wl)).max(o - hi).max(0.0)
    };
    inter.sort_by(|&a, &b| distance(a).total_cmp(&distance(b)).then(samples[a].origin.total_cmp(&samples[b].origin)));
    let test_inter = &inter[..test_pre.len().min(inter.len())];

    let mut test: Vec<usize> = test_pre.iter().chain(test_inter).copied().collect();
    test.sort_by(|&a, &b| canonical(&samples[a], &samples[b]));
    let test_origins: Vec<f64> = test.iter().map(|&i| samples[i].origin).collect();
    let overlaps_test = |o: f64| test_origins.iter().any(|t| (o - t).abs() < wl);

    let train = order
        .into_iter()
        .filter(|&i| {
            let s = &samples[i];
            match s.label {
                Label::Preictal => s.fold_key != Some(fold_key),
                Label::Interictal => !overlaps_test(s.origin),
            }
        })
        .collect();
    Ok(FoldSplit { train, test })
}

fn input_tensor(norm: &BinStandardizer, s: &SpectralSample) -> Result<Tensor4> {
    let [c, f, t] = s.shape;
    Tensor4::from_vec([1, c, f, t], norm.apply(s)?)
}

fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    sum.ln() - (logits[label] - max)
}

/// Mean gradient and summed loss over `batch`. Per-sample work may run in
/// parallel; accumulation follows batch order.
fn batch_gradient(
    params: &ModelParams,
    model: &ModelConfig,
    norm: &BinStandardizer,
    samples: &[SpectralSample],
    batch: &[usize],
) -> Result<(Vec<f64>, f64)> {
    let per_sample = par::map_slice(batch, |&i| -> Result<(ModelParams, f64)> {
        let s = &samples[i];
        let x = input_tensor(norm, s)?;
        let (_, cache) = model_forward(params, model, &x)?;
        let grads = model_backward(params, model, &cache, s.label.class())?;
        Ok((grads, cross_entropy(&cache.logits, s.label.class())))
    });
    let mut sum = vec![0.0; params.len()];
    let mut loss = 0.0;
    for r in per_sample {
        let (g, l) = r?;
        sum.iter_mut().zip(g.data()).for_each(|(s, g)| *s += g);
        loss += l;
    }
    let scale = 1.0 / batch.len() as f64;
    sum.iter_mut().for_each(|g| *g *= scale);
    Ok((sum, loss))
}

/// Trains a fresh network on every sample outside the fold's test set and
/// evaluates it on that test set.
pub fn train_fold(dataset: &Dataset, fold_key: usize, model: &ModelConfig, cfg: &TrainConfig) -> Result<FoldOutcome> {
    cfg.validate()?;
    model.validate()?;
    if model.input_shape != dataset.shape {
        return Err(Error::ShapeMismatch(format!(
            "model input {:?} vs dataset samples {:?}",
            model.input_shape, dataset.shape
        )));
    }
    let samples = &dataset.samples;
    let split = split_fold(dataset, fold_key)?;
    let norm = BinStandardizer::fit(split.train.iter().map(|&i| &samples[i]))?;

    let mut params = init_params(model);
    let mut adam = AdamState::new(params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(fold_key as u64);
    let mut trace = TrainTrace::default();

    for _ in 0..cfg.max_epochs {
        let mut epoch = balance_undersample(&split.train, |&i| samples[i].label, rng.random())?;
        epoch.shuffle(&mut rng);
        let mut loss = 0.0;
        for batch in epoch.chunks(cfg.batch_size) {
            let (grads, batch_loss) = batch_gradient(&params, model, &norm, samples, batch)?;
            adam_step(params.data_mut(), &grads, &mut adam, cfg)?;
            loss += batch_loss;
            trace.batches.push(batch.to_vec());
        }
        trace.epoch_loss.push(loss / epoch.len() as f64);
    }

    let predictions = par::map_slice(&split.test, |&i| -> Result<bool> {
        let (probs, _) = model_forward(&params, model, &input_tensor(&norm, &samples[i])?)?;
        Ok(probs[Label::Preictal.class()] >= cfg.decision_threshold)
    });
    let mut counts = ConfusionCounts::default();
    for (&i, p) in split.test.iter().zip(predictions) {
        counts.record(samples[i].label == Label::Preictal, p?);
    }
    let m = metrics(&counts)?;
    let report = FoldReport {
        fold_key,
        counts,
        acc: m.acc,
        tpr: m.tpr,
        tnr: m.tnr,
        epochs_run: cfg.max_epochs,
        final_loss: trace.epoch_loss.last().copied(),
    };
    Ok(FoldOutcome { report, params, normalization: norm, split, trace })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::segment::{StftConfig, TimingPolicy};
    use rand_distr::{Distribution, Normal};

    pub(crate) const TOY_SHAPE: [usize; 3] = [4, 8, 8];

    /// Three seizures with 12 preictal windows each and 60 interictal windows.
    /// Preictal tensors carry extra energy in frequency row 3.
    pub(crate) fn toy_dataset(seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let [c, f, t] = TOY_SHAPE;
        let mut sample = |label: Label, fold_key: Option<usize>, origin: f64| {
            let mut tensor: Vec<f32> = (0..c * f * t).map(|_| noise.sample(&mut rng) as f32).collect();
            if label == Label::Preictal {
                for ch in 0..c {
                    tensor[(ch * f + 3) * t..(ch * f + 4) * t].iter_mut().for_each(|v| *v += 4.0);
                }
            }
            SpectralSample { tensor, shape: TOY_SHAPE, label, fold_key, origin }
        };
        let mut samples = Vec::new();
        for k in 0..3 {
            for j in 0..12 {
                samples.push(sample(Label::Preictal, Some(k), 20_000.0 * (k + 1) as f64 + 22.0 * j as f64));
            }
        }
        for j in 0..60 {
            samples.push(sample(Label::Interictal, None, 22.0 * j as f64 + if j >= 30 { 70_000.0 } else { 0.0 }));
        }
        Dataset {
            policy: TimingPolicy::default(),
            stft: StftConfig::default(),
            fs: 256.0,
            channel_labels: (0..c).map(|i| format!("CH{i}")).collect(),
            shape: TOY_SHAPE,
            leading: vec![0, 1, 2],
            excluded: vec![],
            samples,
        }
    }

    pub(crate) fn toy_model() -> ModelConfig {
        ModelConfig { input_shape: TOY_SHAPE, n_filters: 4, seed: 11 }
    }

    #[test]
    fn split_is_balanced_and_disjoint() {
        let d = toy_dataset(0);
        let split = split_fold(&d, 1).unwrap();
        let test_pre = split.test.iter().filter(|&&i| d.samples[i].label == Label::Preictal).count();
        assert_eq!((test_pre, split.test.len()), (12, 24));
        for &i in &split.train {
            let s = &d.samples[i];
            assert!(!(s.label == Label::Preictal && s.fold_key == Some(1)));
            for &j in &split.test {
                assert!((s.origin - d.samples[j].origin).abs() >= d.policy.window_len);
            }
        }
        // fold 1 sits at 40000; the second interictal block starts closer than the first ends
        let test_inter: Vec<f64> = split
            .test
            .iter()
            .filter(|&&i| d.samples[i].label == Label::Interictal)
            .map(|&i| d.samples[i].origin)
            .collect();
        assert_eq!(test_inter, (30..42).map(|j| 70_000.0 + 22.0 * j as f64).collect::<Vec<_>>());
        // one interictal neighbour lost to the guard band
        assert_eq!(split.train.len() + split.test.len() + 1, d.samples.len());
    }

    #[test]
    fn missing_fold_has_no_test_samples() {
        let d = toy_dataset(0);
        assert!(matches!(split_fold(&d, 7), Err(Error::NoTestSamples(7))));
    }

    #[test]
    fn no_leakage_into_batches() {
        let d = toy_dataset(1);
        let cfg = TrainConfig { max_epochs: 2, batch_size: 4, ..TrainConfig::default() };
        let out = train_fold(&d, 0, &toy_model(), &cfg).unwrap();
        assert!(!out.trace.batches.is_empty());
        for batch in &out.trace.batches {
            assert!(batch.len() <= 4);
            for &i in batch {
                assert_ne!(d.samples[i].fold_key, Some(0));
                assert!(!out.split.test.contains(&i));
            }
        }
        // balanced epochs: 24 preictal + 24 interictal per epoch
        let per_epoch: usize = out.trace.batches.iter().map(Vec::len).sum::<usize>() / 2;
        assert_eq!(per_epoch, 48);
    }

    #[test]
    fn normalization_uses_training_split_only() {
        let d = toy_dataset(2);
        let cfg = TrainConfig { max_epochs: 0, ..TrainConfig::default() };
        let out = train_fold(&d, 2, &toy_model(), &cfg).unwrap();
        let expected = BinStandardizer::fit(out.split.train.iter().map(|&i| &d.samples[i])).unwrap();
        assert_eq!(out.normalization, expected);
        let everything = BinStandardizer::fit(&d.samples).unwrap();
        assert_ne!(out.normalization, everything);
    }

    #[test]
    fn untrained_report() {
        let d = toy_dataset(3);
        let cfg = TrainConfig { max_epochs: 0, ..TrainConfig::default() };
        let out = train_fold(&d, 0, &toy_model(), &cfg).unwrap();
        assert_eq!(out.report.epochs_run, 0);
        assert_eq!(out.report.final_loss, None);
        assert_eq!(out.report.counts.total(), 24);
        assert!(out.trace.batches.is_empty());
    }

    #[test]
    fn separable_toy_is_learned() {
        let d = toy_dataset(4);
        let cfg = TrainConfig { max_epochs: 20, batch_size: 8, lr: 3e-3, ..TrainConfig::default() };
        let out = train_fold(&d, 1, &toy_model(), &cfg).unwrap();
        assert!(out.report.acc >= 0.9, "{:?}", out.report);
        let losses = &out.trace.epoch_loss;
        assert!(losses.last().unwrap() < &losses[0]);
    }

    #[test]
    fn sample_order_does_not_matter() {
        let d = toy_dataset(5);
        let mut shuffled = d.clone();
        shuffled.samples.reverse();
        let cfg = TrainConfig { max_epochs: 2, ..TrainConfig::default() };
        let a = train_fold(&d, 2, &toy_model(), &cfg).unwrap();
        let b = train_fold(&shuffled, 2, &toy_model(), &cfg).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.params.data(), b.params.data());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let d = toy_dataset(0);
        let model = ModelConfig { input_shape: [4, 8, 9], ..toy_model() };
        assert!(matches!(train_fold(&d, 0, &model, &TrainConfig::default()), Err(Error::ShapeMismatch(_))));
    }
}
