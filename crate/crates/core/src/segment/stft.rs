//! Short-time Fourier transform featurizer.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFn {
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MagnitudeTransform {
    /// `ln(1 + |X|)`
    Log1p,
    Linear,
}

impl MagnitudeTransform {
    pub fn apply(self, magnitude: f64) -> f64 {
        match self {
            MagnitudeTransform::Log1p => magnitude.ln_1p(),
            MagnitudeTransform::Linear => magnitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub window_fn: WindowFn,
    /// Inclusive range of frequency bins kept.
    pub bins_kept: [usize; 2],
    pub magnitude_transform: MagnitudeTransform,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            n_fft: 256,
            hop: 128,
            window_fn: WindowFn::Hann,
            bins_kept: [1, 128],
            magnitude_transform: MagnitudeTransform::Log1p,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.bins_kept;
        if self.n_fft == 0 || self.hop == 0 || self.hop > self.n_fft {
            return Err(Error::InvalidConfig(format!(
                "STFT hop {} must lie in 1..={}",
                self.hop, self.n_fft
            )));
        }
        if lo > hi || hi > self.n_fft / 2 {
            return Err(Error::InvalidConfig(format!(
                "STFT bins {lo}..={hi} must lie within 0..={}",
                self.n_fft / 2
            )));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.bins_kept[1] - self.bins_kept[0] + 1
    }

    /// Frames produced from `len` samples: `1 + (len - n_fft) / hop`.
    pub fn n_frames(&self, len: usize) -> Result<usize> {
        if len < self.n_fft {
            return Err(Error::WindowTooShort { len, n_fft: self.n_fft });
        }
        Ok(1 + (len - self.n_fft) / self.hop)
    }

    pub fn window(&self) -> Vec<f64> {
        let n = self.n_fft as f64;
        match self.window_fn {
            // periodic Hann
            WindowFn::Hann => (0..self.n_fft).map(|i| 0.5 - 0.5 * (TAU * i as f64 / n).cos()).collect(),
        }
    }
}

/// Channel × frequency × time magnitudes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub shape: [usize; 3],
    pub data: Vec<f64>,
}

impl Spectrogram {
    pub fn at(&self, c: usize, f: usize, t: usize) -> f64 {
        let [_, nf, nt] = self.shape;
        self.data[(c * nf + f) * nt + t]
    }
}

/// A planned STFT, reusable across windows and threads.
#[derive(Clone)]
pub struct Stft {
    cfg: StftConfig,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Stft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stft").field("cfg", &self.cfg).finish()
    }
}

impl Stft {
    pub fn new(cfg: StftConfig) -> Result<Self> {
        cfg.validate()?;
        let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        Ok(Self { window: cfg.window(), cfg, fft })
    }

    pub fn config(&self) -> &StftConfig {
        &self.cfg
    }

    /// Output shape for `n_channels` channels of `len` samples.
    pub fn shape(&self, n_channels: usize, len: usize) -> Result<[usize; 3]> {
        Ok([n_channels, self.cfg.n_bins(), self.cfg.n_frames(len)?])
    }

    /// Transforms equal-length channel slices.
    pub fn featurize(&self, channels: &[&[f64]]) -> Result<Spectrogram> {
        let len = channels.first().map_or(0, |c| c.len());
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::ShapeMismatch("STFT channels differ in length".into()));
        }
        let shape = self.shape(channels.len(), len)?;
        let [_, nf, nt] = shape;
        let [lo, _] = self.cfg.bins_kept;
        let n_fft = self.cfg.n_fft;
        let mut data = vec![0.0; shape.iter().product()];
        let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for (c, x) in channels.iter().enumerate() {
            for t in 0..nt {
                let frame = &x[t * self.cfg.hop..t * self.cfg.hop + n_fft];
                for ((b, &v), &w) in buf.iter_mut().zip(frame).zip(&self.window) {
                    *b = Complex::new(v * w, 0.0);
                }
                self.fft.process_with_scratch(&mut buf, &mut scratch);
                for f in 0..nf {
                    data[(c * nf + f) * nt + t] = self.cfg.magnitude_transform.apply(buf[lo + f].norm());
                }
            }
        }
        Ok(Spectrogram { shape, data })
    }
}

/// One-shot STFT of a multichannel window.
pub fn stft_featurize(channels: &[&[f64]], cfg: &StftConfig) -> Result<Spectrogram> {
    Stft::new(*cfg)?.featurize(channels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Direct O(n²) DFT magnitudes of one Hann-windowed frame.
    fn naive_frame(frame: &[f64], window: &[f64], bin: usize) -> f64 {
        let n = frame.len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, (&x, &w)) in frame.iter().zip(window).enumerate() {
            let phi = -TAU * bin as f64 * i as f64 / n;
            re += x * w * phi.cos();
            im += x * w * phi.sin();
        }
        re.hypot(im)
    }

    #[test]
    fn zero_input_gives_zero_tensor() {
        let x = vec![0.0; 1024];
        let s = stft_featurize(&[&x, &x], &StftConfig::default()).unwrap();
        assert!(s.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn thirty_second_window_shape() {
        let x = vec![0.0; 30 * 256];
        let s = stft_featurize(&[x.as_slice(); 18], &StftConfig::default()).unwrap();
        assert_eq!(s.shape, [18, 128, 59]);
        assert_eq!(1 + (7680 - 256) / 128, 59);
    }

    #[test]
    fn ten_hz_peak_in_bin_ten() {
        let x: Vec<f64> = (0..2048).map(|i| (TAU * 10.0 * i as f64 / 256.0).sin()).collect();
        let cfg = StftConfig::default();
        let s = stft_featurize(&[&x], &cfg).unwrap();
        let window = cfg.window();
        for t in 0..s.shape[2] {
            let frame = &x[t * 128..t * 128 + 256];
            // the oracle's argmax over kept bins
            let oracle_peak = (1..=128)
                .max_by(|&a, &b| naive_frame(frame, &window, a).total_cmp(&naive_frame(frame, &window, b)))
                .unwrap();
            assert_eq!(oracle_peak, 10);
            let peak = (0..128).max_by(|&a, &b| s.at(0, a, t).total_cmp(&s.at(0, b, t))).unwrap();
            assert_eq!(peak + 1, 10, "frame {t}");
        }
    }

    #[test]
    fn too_short_window() {
        let x = vec![0.0; 100];
        assert!(matches!(
            stft_featurize(&[&x], &StftConfig::default()),
            Err(Error::WindowTooShort { len: 100, n_fft: 256 })
        ));
    }

    #[test]
    fn invalid_configs() {
        assert!(StftConfig { hop: 0, ..StftConfig::default() }.validate().is_err());
        assert!(StftConfig { hop: 300, ..StftConfig::default() }.validate().is_err());
        assert!(StftConfig { bins_kept: [1, 129], ..StftConfig::default() }.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn matches_naive_dft(seed in any::<u64>(), log_n in 3u32..8, extra in 0usize..300, hop_div in 1usize..4) {
            let n_fft = 1usize << log_n;
            let len = (n_fft + extra).min(1024);
            let hop = (n_fft / hop_div).max(1);
            let cfg = StftConfig {
                n_fft, hop, bins_kept: [0, n_fft / 2],
                magnitude_transform: MagnitudeTransform::Linear, ..StftConfig::default()
            };
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = stft_featurize(&[&x], &cfg).unwrap();
            let window = cfg.window();
            for t in 0..s.shape[2] {
                for f in 0..s.shape[1] {
                    let expect = naive_frame(&x[t * hop..t * hop + n_fft], &window, f);
                    let got = s.at(0, f, t);
                    prop_assert!((got - expect).abs() <= 1e-8 * expect.max(1e-3), "{got} vs {expect}");
                }
            }
        }
    }
}
