//! Class balancing, Adam, per-fold training and leave-one-seizure-out
//! cross-validation.

pub mod adam;
pub mod balance;
pub mod fold;
pub mod loocv;
pub mod metrics;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::{adam_step, AdamState};
pub use balance::balance_undersample;
pub use fold::{split_fold, train_fold, FoldOutcome, FoldReport, FoldSplit, TrainTrace};
pub use loocv::{aggregate, fold_csv, loocv, loocv_with, Aggregate, LoocvResult, FOLD_CSV_HEADER};
pub use metrics::{box_stats, mean, metrics, BoxStats, ConfusionCounts, Metrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Balance {
    #[default]
    UndersampleInterictal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub lr: f64,
    pub betas: [f64; 2],
    pub eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// A sample is called preictal when its preictal probability is at least this.
    pub decision_threshold: f64,
    pub balance: Balance,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Adam,
            lr: 1e-3,
            betas: [0.9, 0.999],
            eps: 1e-8,
            batch_size: 16,
            max_epochs: 20,
            seed: 0,
            decision_threshold: 0.5,
            balance: Balance::UndersampleInterictal,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidConfig(format!("train: {why}")));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return bad("decision_threshold must lie in (0, 1)");
        }
        if self.betas.iter().any(|b| !(0.0..1.0).contains(b)) {
            return bad("betas must lie in [0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        Ok(())
    }
}
