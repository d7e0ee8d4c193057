//! Central finite-difference checks of every layer's backward pass and of the
//! full model. The differences use forward passes only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;

use super::activation::{relu, relu_backward};
use super::conv::{conv3d_backward, conv3d_forward, ConvGrads, ConvSpec, Padding};
use super::dense::dense_softmax_xent;
use super::model::{init_params, model_backward, model_forward, model_loss, ModelConfig};
use super::pool::{global_avg_pool, global_avg_pool_backward, maxpool3d, maxpool3d_backward};
use super::{Tensor4, BRANCH_DILATIONS};

pub type ConvBackwardFn = fn(&Tensor4, &ConvSpec, &[f64], &Tensor4) -> Result<ConvGrads>;

#[derive(Clone, Copy)]
pub struct GradcheckOptions {
    pub seed: u64,
    pub step: f64,
    pub tolerance: f64,
    /// Random conv cases on top of one per model dilation.
    pub conv_cases: usize,
    /// Backward pass under test for the conv row.
    pub conv_backward: ConvBackwardFn,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self { seed: 0, step: 1e-5, tolerance: 1e-4, conv_cases: 8, conv_backward: conv3d_backward }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerCheck {
    pub layer: &'static str,
    pub cases: usize,
    /// Number of scalar partial derivatives compared.
    pub partials: usize,
    pub worst_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub tolerance: f64,
    pub rows: Vec<LayerCheck>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// `|a - n| / max(|a|, |n|, 1e-6)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
    if analytic.is_finite() && numeric.is_finite() {
        (analytic - numeric).abs() / scale
    } else {
        f64::INFINITY
    }
}

struct Tally {
    cases: usize,
    partials: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self { cases: 0, partials: 0, worst: 0.0 }
    }

    fn compare(&mut self, analytic: &[f64], numeric: &[f64]) {
        if analytic.len() != numeric.len() {
            self.worst = f64::INFINITY;
            return;
        }
        self.partials += analytic.len();
        for (a, n) in analytic.iter().zip(numeric) {
            self.worst = self.worst.max(relative_error(*a, *n));
        }
    }

    fn row(self, layer: &'static str, tolerance: f64) -> LayerCheck {
        LayerCheck {
            layer,
            cases: self.cases,
            partials: self.partials,
            worst_rel_error: self.worst,
            passed: self.worst < tolerance,
        }
    }
}

/// Central differences of `f` at `x`.
fn numeric_gradient(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: [usize; 4]) -> Tensor4 {
    Tensor4::from_vec(shape, uniform(rng, shape.iter().product())).expect("shape")
}

fn check_conv_case(
    rng: &mut ChaCha8Rng,
    spec: ConvSpec,
    spatial: [usize; 3],
    opts: &GradcheckOptions,
    tally: &mut Tally,
) -> Result<()> {
    let x = random_tensor(rng, [spec.in_maps, spatial[0], spatial[1], spatial[2]]);
    let w = uniform(rng, spec.weight_len());
    let b = uniform(rng, spec.n_filters);
    let y = conv3d_forward(&x, &spec, &w, &b)?;
    let r = random_tensor(rng, y.shape());
    let grads = (opts.conv_backward)(&x, &spec, &w, &r)?;
    let loss = |x: &Tensor4, w: &[f64], b: &[f64]| {
        conv3d_forward(x, &spec, w, b).map_or(f64::NAN, |y| dot(y.data(), r.data()))
    };
    let nx = numeric_gradient(x.data(), opts.step, |d| {
        loss(&Tensor4::from_vec(x.shape(), d.to_vec()).expect("shape"), &w, &b)
    });
    let nw = numeric_gradient(&w, opts.step, |d| loss(&x, d, &b));
    let nb = numeric_gradient(&b, opts.step, |d| loss(&x, &w, d));
    tally.compare(grads.grad_x.data(), &nx);
    tally.compare(&grads.grad_w, &nw);
    tally.compare(&grads.grad_b, &nb);
    tally.cases += 1;
    Ok(())
}

fn check_conv(rng: &mut ChaCha8Rng, opts: &GradcheckOptions) -> Result<LayerCheck> {
    let mut tally = Tally::new();
    // every model dilation with a model kernel, Same padding
    for (i, dilation) in BRANCH_DILATIONS.iter().enumerate() {
        let kernel = if i % 2 == 0 { [1, 2, 3] } else { [2, 2, 3] };
        let spec = ConvSpec { kernel, dilation: *dilation, n_filters: 2, in_maps: 2, padding: Padding::Same };
        check_conv_case(rng, spec, [3, 4, 8], opts, &mut tally)?;
    }
    for _ in 0..opts.conv_cases {
        let spatial = [rng.random_range(1..=3), rng.random_range(2..=6), rng.random_range(3..=8)];
        let kernel = [0, 1, 2].map(|_| rng.random_range(1..=3));
        let dilation = [0, 1, 2].map(|_| rng.random_range(1..=3));
        let mut spec = ConvSpec {
            kernel,
            dilation,
            n_filters: rng.random_range(1..=2),
            in_maps: rng.random_range(1..=2),
            padding: Padding::Same,
        };
        if rng.random_bool(0.5) && spec.geometry(spatial).is_ok() {
            spec.padding = Padding::Valid;
            if spec.geometry(spatial).is_err() {
                spec.padding = Padding::Same;
            }
        }
        check_conv_case(rng, spec, spatial, opts, &mut tally)?;
    }
    Ok(tally.row("conv", opts.tolerance))
}

fn check_relu(rng: &mut ChaCha8Rng, opts: &GradcheckOptions) -> LayerCheck {
    let mut tally = Tally::new();
    for _ in 0..4 {
        // keep inputs away from the kink
        let data: Vec<f64> = uniform(rng, 2 * 3 * 4 * 5)
            .into_iter()
            .map(|v| if v.abs() < 0.1 { v.signum() * 0.1 + v } else { v })
            .collect();
        let x = Tensor4::from_vec([2, 3, 4, 5], data).expect("shape");
        let r = random_tensor(rng, x.shape());
        let analytic = relu_backward(&x, &r);
        let numeric = numeric_gradient(x.data(), opts.step, |d| {
            dot(relu(&Tensor4::from_vec(x.shape(), d.to_vec()).expect("shape")).data(), r.data())
        });
        tally.compare(analytic.data(), &numeric);
        tally.cases += 1;
    }
    tally.row("relu", opts.tolerance)
}

fn check_pool(rng: &mut ChaCha8Rng, opts: &GradcheckOptions) -> Result<LayerCheck> {
    let mut tally = Tally::new();
    for pool in [[1, 2, 2], [2, 2, 2], [1, 1, 3], [2, 3, 2]] {
        let x = random_tensor(rng, [2, 3, 5, 7]);
        let (y, argmax) = maxpool3d(&x, pool)?;
        let r = random_tensor(rng, y.shape());
        let analytic = maxpool3d_backward(&argmax, &r, x.shape())?;
        let numeric = numeric_gradient(x.data(), opts.step, |d| {
            let t = Tensor4::from_vec(x.shape(), d.to_vec()).expect("shape");
            maxpool3d(&t, pool).map_or(f64::NAN, |(y, _)| dot(y.data(), r.data()))
        });
        tally.compare(analytic.data(), &numeric);
        tally.cases += 1;
    }
    Ok(tally.row("pool", opts.tolerance))
}

fn check_gap(rng: &mut ChaCha8Rng, opts: &GradcheckOptions) -> Result<LayerCheck> {
    let mut tally = Tally::new();
    for shape in [[1, 1, 1, 4], [3, 2, 3, 4], [2, 4, 2, 5]] {
        let x = random_tensor(rng, shape);
        let r = uniform(rng, shape[0]);
        let analytic = global_avg_pool_backward(&r, shape)?;
        let numeric = numeric_gradient(x.data(), opts.step, |d| {
            dot(&global_avg_pool(&Tensor4::from_vec(shape, d.to_vec()).expect("shape")), &r)
        });
        tally.compare(analytic.data(), &numeric);
        tally.cases += 1;
    }
    Ok(tally.row("gap", opts.tolerance))
}

fn check_dense(rng: &mut ChaCha8Rng, opts: &GradcheckOptions) -> Result<LayerCheck> {
    let mut tally = Tally::new();
    for (n_features, label) in [(3, 0), (8, 1), (16, 1)] {
        let f = uniform(rng, n_features);
        let w = uniform(rng, 2 * n_features);
        let b = uniform(rng, 2);
        let (_, grads) = dense_softmax_xent(&f, &w, &b, label)?;
        let loss = |f: &[f64], w: &[f64], b: &[f64]| {
            dense_softmax_xent(f, w, b, label).map_or(f64::NAN, |(o, _)| o.loss)
        };
        tally.compare(&grads.grad_w, &numeric_gradient(&w, opts.step, |d| loss(&f, d, &b)));
        tally.compare(&grads.grad_b, &numeric_gradient(&b, opts.step, |d| loss(&f, &w, d)));
        tally.compare(&grads.grad_features, &numeric_gradient(&f, opts.step, |d| loss(d, &w, &b)));
        tally.cases += 1;
    }
    Ok(tally.row("dense", opts.tolerance))
}

fn check_model(rng: &mut ChaCha8Rng, opts: &GradcheckOptions) -> Result<LayerCheck> {
    let mut tally = Tally::new();
    for label in [1, 0] {
        let config = ModelConfig { input_shape: [4, 8, 12], n_filters: 2, seed: rng.random() };
        // nonzero biases keep fully padded outputs off the ReLU kink
        let mut params = init_params(&config);
        let layout = params.layout().clone();
        let biases = layout.conv.iter().map(|(_, b)| b.clone()).chain([layout.dense_b]);
        for r in biases {
            params.data_mut()[r].iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        }
        let x = random_tensor(rng, [1, 4, 8, 12]);
        let (_, cache) = model_forward(&params, &config, &x)?;
        let grads = model_backward(&params, &config, &cache, label)?;
        let mut probe = params.clone();
        let numeric = numeric_gradient(params.data(), opts.step, |d| {
            probe.data_mut().copy_from_slice(d);
            model_loss(&probe, &config, &x, label).unwrap_or(f64::NAN)
        });
        tally.compare(grads.data(), &numeric);
        tally.cases += 1;
    }
    Ok(tally.row("model", opts.tolerance))
}

/// Runs every check; one report row per layer type plus the full model.
pub fn run_gradcheck(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let rows = vec![
        check_conv(&mut rng, opts)?,
        check_relu(&mut rng, opts),
        check_pool(&mut rng, opts)?,
        check_gap(&mut rng, opts)?,
        check_dense(&mut rng, opts)?,
        check_model(&mut rng, opts)?,
    ];
    Ok(GradcheckReport { tolerance: opts.tolerance, rows })
}
