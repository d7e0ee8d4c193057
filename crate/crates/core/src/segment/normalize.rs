//! Per-frequency-bin standardization. Statistics pool every channel and frame
//! of the samples they are fit on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::SpectralSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStandardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl BinStandardizer {
    /// Fits on `samples`, which must share one `(C, F, T)` shape.
    pub fn fit<'a>(samples: impl IntoIterator<Item = &'a SpectralSample>) -> Result<Self> {
        let mut shape = None;
        let mut sum = Vec::new();
        let mut sq = Vec::new();
        let mut n = 0usize;
        for s in samples {
            let [c, f, t] = s.shape;
            match shape {
                None => {
                    shape = Some(s.shape);
                    sum = vec![0.0; f];
                    sq = vec![0.0; f];
                }
                Some(sh) if sh != s.shape => {
                    return Err(Error::ShapeMismatch(format!("sample {:?} vs {:?}", s.shape, sh)))
                }
                _ => {}
            }
            for ch in 0..c {
                for bin in 0..f {
                    let row = &s.tensor[(ch * f + bin) * t..(ch * f + bin + 1) * t];
                    for &v in row {
                        let v = v as f64;
                        sum[bin] += v;
                        sq[bin] += v * v;
                    }
                }
            }
            n += c * t;
        }
        if n == 0 {
            return Err(Error::InvalidConfig("cannot fit normalization on zero samples".into()));
        }
        let n = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let var = (q / n - m * m).max(0.0);
                if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn n_bins(&self) -> usize {
        self.mean.len()
    }

    /// Standardized copy of a sample tensor as f64.
    pub fn apply(&self, sample: &SpectralSample) -> Result<Vec<f64>> {
        let [c, f, t] = sample.shape;
        if f != self.n_bins() {
            return Err(Error::ShapeMismatch(format!("{f} bins, normalizer has {}", self.n_bins())));
        }
        let mut out = Vec::with_capacity(c * f * t);
        for ch in 0..c {
            for bin in 0..f {
                let (m, s) = (self.mean[bin], self.std[bin]);
                let row = &sample.tensor[(ch * f + bin) * t..(ch * f + bin + 1) * t];
                out.extend(row.iter().map(|&v| (v as f64 - m) / s));
            }
        }
        Ok(out)
    }
}
