//! Binary classification metrics with *changed* (label `0`) as the positive class.

use serde::{Deserialize, Serialize};

use crate::contextual::classify_by_threshold;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    /// Predicted changed, gold changed.
    pub tp: usize,
    /// Predicted changed, gold same.
    pub fp: usize,
    /// Predicted same, gold changed.
    pub fn_: usize,
    /// Predicted same, gold same.
    pub tn: usize,
    pub f1: f64,
    pub accuracy: f64,
}

impl BinaryMetrics {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn binary_metrics(predictions: &[u8], golds: &[u8]) -> Result<BinaryMetrics> {
    if predictions.len() != golds.len() {
        return Err(Error::DimensionMismatch {
            expected: golds.len(),
            actual: predictions.len(),
        });
    }
    if golds.is_empty() {
        return Err(Error::InsufficientData("no instances to score".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &g) in predictions.iter().zip(golds) {
        match (p, g) {
            (0, 0) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            (1, 1) => tn += 1,
            _ => {
                return Err(Error::invalid(
                    "labels",
                    format!("labels must be 0 or 1, got ({p}, {g})"),
                ))
            }
        }
    }
    let denom = 2 * tp + fp + fn_;
    let f1 = if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    };
    let accuracy = (tp + tn) as f64 / golds.len() as f64;
    Ok(BinaryMetrics {
        tp,
        fp,
        fn_,
        tn,
        f1,
        accuracy,
    })
}

/// `0.00, 0.01, …, 1.00`
pub fn default_threshold_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub metrics: BinaryMetrics,
}

/// Exhaustive sweep maximizing F1; ties go to the smallest threshold.
pub fn optimize_threshold(distances: &[f64], golds: &[u8], grid: &[f64]) -> Result<ThresholdChoice> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "threshold grid is empty"));
    }
    if let Some(first) = golds.first() {
        if golds.iter().all(|g| g == first) {
            return Err(Error::InsufficientData(
                "all gold labels are identical; threshold optimization is degenerate".into(),
            ));
        }
    }
    let mut best: Option<ThresholdChoice> = None;
    for &t in grid {
        let preds = classify_by_threshold(distances, t)?;
        let metrics = binary_metrics(&preds, golds)?;
        let better = match &best {
            None => true,
            Some(b) => metrics.f1 > b.metrics.f1 || (metrics.f1 == b.metrics.f1 && t < b.threshold),
        };
        if better {
            best = Some(ThresholdChoice { threshold: t, metrics });
        }
    }
    Ok(best.expect("grid is nonempty"))
}
