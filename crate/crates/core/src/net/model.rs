//! Four parallel dilated branches, each `[conv → ReLU → max-pool] × 3` followed
//! by global average pooling; the branch vectors are concatenated and fed to a
//! dense softmax classifier (class 1 = preictal).
//!
//! Parameter order (also the checkpoint order): branch-major, then layer, each
//! layer's weights before its bias; the dense weights and bias come last.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

use super::activation::{relu_backward_inplace, relu_inplace};
use super::conv::{conv3d_backward_input, conv3d_backward_params, conv3d_forward, ConvSpec, Padding};
use super::dense::{dense_forward, dense_softmax_backward, softmax};
use super::pool::{global_avg_pool, global_avg_pool_backward, maxpool3d, maxpool3d_backward};
use super::Tensor4;

/// Dilation of each branch, in concatenation order.
pub const BRANCH_DILATIONS: [[usize; 3]; 4] = [[1, 1, 3], [1, 1, 5], [3, 1, 3], [3, 1, 5]];
pub const LAYER_KERNELS: [[usize; 3]; 3] = [[1, 2, 3], [2, 2, 3], [2, 2, 3]];
pub const LAYER_POOLS: [[usize; 3]; 3] = [[1, 2, 2], [2, 2, 2], [2, 2, 2]];
pub const N_CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub dilation: [usize; 3],
    pub n_filters: usize,
}

impl BranchSpec {
    pub fn conv(&self, layer: usize) -> ConvSpec {
        ConvSpec {
            kernel: LAYER_KERNELS[layer],
            dilation: self.dilation,
            n_filters: self.n_filters,
            in_maps: if layer == 0 { 1 } else { self.n_filters },
            padding: Padding::Same,
        }
    }

    pub fn pool(&self, layer: usize) -> [usize; 3] {
        LAYER_POOLS[layer]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// `(C, F, T)` of one sample.
    pub input_shape: [usize; 3],
    pub n_filters: usize,
    /// Initialization seed.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { input_shape: [18, 128, 59], n_filters: 16, seed: 0 }
    }
}

impl ModelConfig {
    pub fn branches(&self) -> [BranchSpec; 4] {
        BRANCH_DILATIONS.map(|dilation| BranchSpec { dilation, n_filters: self.n_filters })
    }

    pub fn feature_len(&self) -> usize {
        BRANCH_DILATIONS.len() * self.n_filters
    }

    /// Shape of each layer's pooled output (identical across branches).
    pub fn layer_shapes(&self) -> Result<[[usize; 4]; 3]> {
        if self.n_filters == 0 || self.input_shape.contains(&0) {
            return Err(Error::InvalidConfig(format!("degenerate model config {self:?}")));
        }
        let mut sp = self.input_shape;
        let mut out = [[0; 4]; 3];
        for (l, pool) in LAYER_POOLS.iter().enumerate() {
            if (0..3).any(|a| pool[a] > sp[a]) {
                return Err(Error::PoolLargerThanInput { pool: *pool, input: sp });
            }
            sp = [0, 1, 2].map(|a| sp[a] / pool[a]);
            out[l] = [self.n_filters, sp[0], sp[1], sp[2]];
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        self.layer_shapes().map(|_| ())
    }

    pub fn layout(&self) -> ParamLayout {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let mut conv = Vec::with_capacity(12);
        for b in self.branches() {
            for l in 0..3 {
                let spec = b.conv(l);
                let w = take(spec.weight_len());
                let bias = take(spec.n_filters);
                conv.push((w, bias));
            }
        }
        let dense_w = take(N_CLASSES * self.feature_len());
        let dense_b = take(N_CLASSES);
        ParamLayout { conv, dense_w, dense_b, total: at }
    }
}

/// Offsets of every parameter block inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    /// `(weights, bias)` per `branch * 3 + layer`.
    pub conv: Vec<(Range<usize>, Range<usize>)>,
    pub dense_w: Range<usize>,
    pub dense_b: Range<usize>,
    pub total: usize,
}

/// Flat parameter (or gradient) vector with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    layout: ParamLayout,
    data: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let layout = config.layout();
        let data = vec![0.0; layout.total];
        Self { layout, data }
    }

    pub fn from_vec(config: &ModelConfig, data: Vec<f64>) -> Result<Self> {
        let layout = config.layout();
        if data.len() != layout.total {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters for a model with {}",
                data.len(),
                layout.total
            )));
        }
        Ok(Self { layout, data })
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn conv(&self, branch: usize, layer: usize) -> (&[f64], &[f64]) {
        let (w, b) = &self.layout.conv[branch * 3 + layer];
        (&self.data[w.clone()], &self.data[b.clone()])
    }

    pub fn conv_mut(&mut self, branch: usize, layer: usize) -> (&mut [f64], &mut [f64]) {
        let (w, b) = self.layout.conv[branch * 3 + layer].clone();
        let (lo, hi) = self.data.split_at_mut(b.start);
        (&mut lo[w], &mut hi[..b.len()])
    }

    pub fn dense(&self) -> (&[f64], &[f64]) {
        (&self.data[self.layout.dense_w.clone()], &self.data[self.layout.dense_b.clone()])
    }

    /// Flat range holding every parameter of one branch.
    pub fn branch_range(&self, branch: usize) -> Range<usize> {
        self.layout.conv[branch * 3].0.start..self.layout.conv[branch * 3 + 2].1.end
    }

    fn matches(&self, config: &ModelConfig) -> bool {
        self.layout == config.layout()
    }
}

/// He-normal conv and dense weights (std `sqrt(2 / fan_in)`), zero biases.
pub fn init_params(config: &ModelConfig) -> ModelParams {
    let mut params = ModelParams::zeros(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let fill = |slice: &mut [f64], fan_in: usize, rng: &mut ChaCha8Rng| {
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
        slice.iter_mut().for_each(|w| *w = normal.sample(rng));
    };
    for (b, branch) in config.branches().iter().enumerate() {
        for l in 0..3 {
            let fan_in = branch.conv(l).fan_in();
            let (w, _) = params.conv_mut(b, l);
            fill(w, fan_in, &mut rng);
        }
    }
    let range = params.layout.dense_w.clone();
    fill(&mut params.data[range], config.feature_len(), &mut rng);
    params
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Tensor4,
    /// Conv output before ReLU.
    pre_act: Tensor4,
    argmax: Vec<usize>,
}

#[derive(Debug, Clone)]
struct BranchCache {
    layers: Vec<LayerCache>,
    last_shape: [usize; 4],
}

/// Intermediates of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    branches: Vec<BranchCache>,
    pub features: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

fn branch_forward(params: &ModelParams, b: usize, spec: &BranchSpec, x: &Tensor4) -> Result<(Vec<f64>, BranchCache)> {
    let mut layers = Vec::with_capacity(3);
    let mut input = x.clone();
    for l in 0..3 {
        let (w, bias) = params.conv(b, l);
        let pre_act = conv3d_forward(&input, &spec.conv(l), w, bias)?;
        let mut act = pre_act.clone();
        relu_inplace(&mut act);
        let (pooled, argmax) = maxpool3d(&act, spec.pool(l))?;
        layers.push(LayerCache { input, pre_act, argmax });
        input = pooled;
    }
    Ok((global_avg_pool(&input), BranchCache { layers, last_shape: input.shape() }))
}

/// Class probabilities for one `(1, C, F, T)` sample, and the cache for backward.
pub fn model_forward(params: &ModelParams, config: &ModelConfig, x: &Tensor4) -> Result<(Vec<f64>, ForwardCache)> {
    let [c, f, t] = config.input_shape;
    if x.shape() != [1, c, f, t] {
        return Err(Error::ShapeMismatch(format!(
            "sample shape {:?} does not match model input {:?}",
            x.shape(),
            config.input_shape
        )));
    }
    if !params.matches(config) {
        return Err(Error::ShapeMismatch("parameters do not match the model config".into()));
    }
    let specs = config.branches();
    let outs = par::map_range(specs.len(), |b| branch_forward(params, b, &specs[b], x));
    let mut features = Vec::with_capacity(config.feature_len());
    let mut branches = Vec::with_capacity(specs.len());
    for out in outs {
        let (gap, cache) = out?;
        features.extend(gap);
        branches.push(cache);
    }
    let (w, b) = params.dense();
    let logits = dense_forward(&features, w, b)?;
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFiniteInput(format!("logits {logits:?}")));
    }
    let probs = softmax(&logits);
    Ok((probs.clone(), ForwardCache { branches, features, logits, probs }))
}

/// Cross-entropy of one sample.
pub fn model_loss(params: &ModelParams, config: &ModelConfig, x: &Tensor4, label: usize) -> Result<f64> {
    let (_, cache) = model_forward(params, config, x)?;
    let max = cache.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = cache.logits.iter().map(|z| (z - max).exp()).sum();
    Ok(sum.ln() - (cache.logits[label] - max))
}

type LayerGrads = Vec<(Vec<f64>, Vec<f64>)>;

fn branch_backward(
    params: &ModelParams,
    b: usize,
    spec: &BranchSpec,
    cache: &BranchCache,
    grad_features: &[f64],
) -> Result<LayerGrads> {
    let mut grads = vec![(Vec::new(), Vec::new()); 3];
    let mut g = global_avg_pool_backward(grad_features, cache.last_shape)?;
    for l in (0..3).rev() {
        let lc = &cache.layers[l];
        g = maxpool3d_backward(&lc.argmax, &g, lc.pre_act.shape())?;
        relu_backward_inplace(&lc.pre_act, &mut g);
        let conv = spec.conv(l);
        grads[l] = conv3d_backward_params(&lc.input, &conv, &g)?;
        if l > 0 {
            g = conv3d_backward_input(lc.input.shape(), &conv, params.conv(b, l).0, &g)?;
        }
    }
    Ok(grads)
}

/// Exact gradient of the cross-entropy loss for `label` with respect to every parameter.
pub fn model_backward(
    params: &ModelParams,
    config: &ModelConfig,
    cache: &ForwardCache,
    label: usize,
) -> Result<ModelParams> {
    let specs = config.branches();
    let stale = |why: String| Err(Error::StaleCache(why));
    if !params.matches(config) {
        return stale("parameters do not match the model config".into());
    }
    if cache.features.len() != config.feature_len() || cache.branches.len() != specs.len() {
        return stale(format!(
            "cache holds {} features, model expects {}",
            cache.features.len(),
            config.feature_len()
        ));
    }
    if cache.branches.iter().any(|bc| bc.last_shape[0] != config.n_filters) {
        return stale("cache filter count differs from the model".into());
    }
    if label >= N_CLASSES {
        return Err(Error::ShapeMismatch(format!("label {label} for {N_CLASSES} classes")));
    }

    let (w, _) = params.dense();
    let dense = dense_softmax_backward(&cache.features, w, &cache.probs, label);
    let nf = config.n_filters;
    let per_branch = par::map_range(specs.len(), |b| {
        branch_backward(params, b, &specs[b], &cache.branches[b], &dense.grad_features[b * nf..(b + 1) * nf])
    });

    let mut grads = ModelParams::zeros(config);
    for (b, layers) in per_branch.into_iter().enumerate() {
        for (l, (gw, gb)) in layers?.into_iter().enumerate() {
            let (w, bias) = grads.conv_mut(b, l);
            w.copy_from_slice(&gw);
            bias.copy_from_slice(&gb);
        }
    }
    let layout = grads.layout.clone();
    grads.data[layout.dense_w].copy_from_slice(&dense.grad_w);
    grads.data[layout.dense_b].copy_from_slice(&dense.grad_b);
    Ok(grads)
}
