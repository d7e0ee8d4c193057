//! Leave-one-seizure-out cross-validation over the leading seizures.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::ModelConfig;
use crate::segment::{Dataset, MIN_LEADING_SEIZURES};

use super::metrics::{box_stats, mean, BoxStats, Metrics};
use super::{train_fold, FoldOutcome, FoldReport, TrainConfig};

pub const FOLD_CSV_HEADER: &str = "fold_key,acc,tpr,tnr,epochs,loss";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_folds: usize,
    pub mean: Metrics,
    pub acc: BoxStats,
    pub tpr: BoxStats,
    pub tnr: BoxStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoocvResult {
    pub folds: Vec<FoldReport>,
    pub aggregate: Aggregate,
}

/// Means and five-number summaries across folds; `None` without folds.
pub fn aggregate(folds: &[FoldReport]) -> Option<Aggregate> {
    let col = |f: fn(&FoldReport) -> f64| folds.iter().map(f).collect::<Vec<_>>();
    let (acc, tpr, tnr) = (col(|r| r.acc), col(|r| r.tpr), col(|r| r.tnr));
    Some(Aggregate {
        n_folds: folds.len(),
        acc: box_stats(&acc)?,
        tpr: box_stats(&tpr)?,
        tnr: box_stats(&tnr)?,
        mean: Metrics { acc: mean(&acc), tpr: mean(&tpr), tnr: mean(&tnr) },
    })
}

/// One row per fold under [`FOLD_CSV_HEADER`]; an empty loss field means no
/// epoch ran.
pub fn fold_csv(folds: &[FoldReport]) -> String {
    let mut out = format!("{FOLD_CSV_HEADER}\n");
    for r in folds {
        let loss = r.final_loss.map(|l| l.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{},{}", r.fold_key, r.acc, r.tpr, r.tnr, r.epochs_run, loss).expect("string write");
    }
    out
}

/// Runs every fold in fold-key order, handing each outcome to `on_fold`
/// before the next fold starts.
pub fn loocv_with(
    dataset: &Dataset,
    model: &ModelConfig,
    cfg: &TrainConfig,
    mut on_fold: impl FnMut(&FoldOutcome) -> Result<()>,
) -> Result<LoocvResult> {
    let keys = dataset.fold_keys();
    if keys.len() < MIN_LEADING_SEIZURES {
        return Err(Error::InsufficientSeizures { found: keys.len(), required: MIN_LEADING_SEIZURES });
    }
    let mut folds = Vec::with_capacity(keys.len());
    for k in keys {
        let outcome = train_fold(dataset, k, model, cfg)?;
        on_fold(&outcome)?;
        folds.push(outcome.report);
    }
    let aggregate = aggregate(&folds).expect("at least one fold");
    Ok(LoocvResult { folds, aggregate })
}

pub fn loocv(dataset: &Dataset, model: &ModelConfig, cfg: &TrainConfig) -> Result<LoocvResult> {
    loocv_with(dataset, model, cfg, |_| Ok(()))
}
