use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seizure_core::net::{
    conv3d_backward, conv3d_forward, init_params, model_backward, model_forward, ConvSpec, ModelConfig, Padding,
    Tensor4,
};
use seizure_core::par;
use seizure_core::segment::{Stft, StftConfig};

fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Runs `f` once in each execution mode under the same group.
fn both_modes(c: &mut Criterion, group: &str, mut f: impl FnMut()) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_function(BenchmarkId::from_parameter("parallel"), |b| b.iter(&mut f));
    g.bench_function(BenchmarkId::from_parameter("sequential"), |b| b.iter(|| par::sequential(&mut f)));
    g.finish();
}

fn conv(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let spec = ConvSpec { kernel: [2, 2, 3], dilation: [3, 1, 5], n_filters: 16, in_maps: 16, padding: Padding::Same };
    let x = Tensor4::from_vec([16, 4, 16, 29], random(&mut rng, 16 * 4 * 16 * 29)).unwrap();
    let w = random(&mut rng, spec.weight_len());
    let b = random(&mut rng, 16);
    let y = conv3d_forward(&x, &spec, &w, &b).unwrap();
    both_modes(c, "conv3d_forward", || {
        std::hint::black_box(conv3d_forward(&x, &spec, &w, &b).unwrap());
    });
    both_modes(c, "conv3d_backward", || {
        std::hint::black_box(conv3d_backward(&x, &spec, &w, &y).unwrap());
    });
}

fn stft(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = StftConfig::default();
    let stft = Stft::new(cfg).unwrap();
    let windows: Vec<Vec<Vec<f64>>> = (0..8).map(|_| (0..18).map(|_| random(&mut rng, 30 * 256)).collect()).collect();
    both_modes(c, "stft_18ch_8windows", || {
        let out = par::map_slice(&windows, |w| {
            let chans: Vec<&[f64]> = w.iter().map(Vec::as_slice).collect();
            stft.featurize(&chans).unwrap()
        });
        std::hint::black_box(out);
    });
}

fn model(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let config = ModelConfig { input_shape: [4, 32, 59], n_filters: 16, seed: 3 };
    let params = init_params(&config);
    let x = Tensor4::from_vec([1, 4, 32, 59], random(&mut rng, 4 * 32 * 59)).unwrap();
    both_modes(c, "model_forward_backward", || {
        let (_, cache) = model_forward(&params, &config, &x).unwrap();
        std::hint::black_box(model_backward(&params, &config, &cache, 1).unwrap());
    });
}

criterion_group!(benches, conv, stft, model);
criterion_main!(benches);
