use std::f64::consts::TAU;

use proptest::prelude::*;

use seizure_core::segment::{stft_featurize, MagnitudeTransform, StftConfig};

/// |X_k| of a periodic-Hann-windowed frame by the defining sum.
fn naive_magnitude(frame: &[f64], k: usize) -> f64 {
    let n = frame.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (i, &v) in frame.iter().enumerate() {
        let w = 0.5 - 0.5 * (TAU * i as f64 / n).cos();
        let phase = TAU * (k * i) as f64 / n;
        re += v * w * phase.cos();
        im -= v * w * phase.sin();
    }
    re.hypot(im)
}

fn signal(len: usize, seed: u64) -> Vec<f64> {
    // cheap deterministic pseudo-noise plus two tones
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..len)
        .map(|i| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let noise = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            noise + (TAU * 10.0 * i as f64 / 256.0).sin() + 0.3 * (TAU * 47.5 * i as f64 / 256.0).cos()
        })
        .collect()
}

#[test]
fn default_window_shape() {
    let x = vec![0.25; 30 * 256];
    let chans: Vec<&[f64]> = (0..3).map(|_| x.as_slice()).collect();
    let s = stft_featurize(&chans, &StftConfig::default()).unwrap();
    assert_eq!(s.shape, [3, 128, 59]);
}

#[test]
fn linear_magnitudes_match_naive_dft() {
    let cfg = StftConfig { magnitude_transform: MagnitudeTransform::Linear, ..StftConfig::default() };
    let x = signal(30 * 256, 3);
    let s = stft_featurize(&[x.as_slice()], &cfg).unwrap();
    for t in [0, 1, 29, 58] {
        let frame = &x[t * 128..t * 128 + 256];
        for f in 0..128 {
            let want = naive_magnitude(frame, f + 1);
            let got = s.at(0, f, t);
            assert!((got - want).abs() <= 1e-8 * want.max(1e-3), "t={t} bin={} {got} vs {want}", f + 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn log_magnitudes_match_naive_dft(seed in any::<u64>(), n_exp in 4u32..8, lo in 0usize..4) {
        let n_fft = 1usize << n_exp;
        let hi = n_fft / 2 - lo.min(2);
        let cfg = StftConfig { n_fft, hop: n_fft / 2, bins_kept: [lo, hi], ..StftConfig::default() };
        let x = signal(3 * n_fft, seed);
        let s = stft_featurize(&[x.as_slice()], &cfg).unwrap();
        prop_assert_eq!(s.shape, [1, hi - lo + 1, 5]);
        for t in 0..5 {
            let frame = &x[t * n_fft / 2..][..n_fft];
            for f in 0..=hi - lo {
                let want = naive_magnitude(frame, lo + f).ln_1p();
                let got = s.at(0, f, t);
                prop_assert!((got - want).abs() <= 1e-8 * want.max(1e-3));
            }
        }
    }
}
