//! Sample-level confusion counts, ACC/TPR/TNR and box-plot statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive class is preictal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub fp: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.tn + self.fp
    }

    /// Records one prediction.
    pub fn record(&mut self, actual_preictal: bool, predicted_preictal: bool) {
        match (actual_preictal, predicted_preictal) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub acc: f64,
    pub tpr: f64,
    pub tnr: f64,
}

/// `acc = (tp+tn)/total`, `tpr = tp/(tp+fn)`, `tnr = tn/(tn+fp)`; one division each.
pub fn metrics(c: &ConfusionCounts) -> Result<Metrics> {
    let ratio = |num: u64, den: u64, name: &'static str| {
        if den == 0 {
            Err(Error::UndefinedMetric(name))
        } else {
            Ok(num as f64 / den as f64)
        }
    };
    Ok(Metrics {
        acc: ratio(c.tp + c.tn, c.total(), "acc")?,
        tpr: ratio(c.tp, c.tp + c.fn_, "tpr")?,
        tnr: ratio(c.tn, c.tn + c.fp, "tnr")?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile `q` of sorted data, linear interpolation between closest ranks.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five-number summary; whiskers at min and max. `None` for empty input.
pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(BoxStats {
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
