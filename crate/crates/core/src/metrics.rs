//! Accuracy, per-class precision/recall/F1 and their support-weighted means.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Count matrix; entry `(i, j)` is the number of samples of true class `i`
/// predicted as `j`.
pub type ConfusionMatrix = Array2<usize>;

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut cm = ConfusionMatrix::zeros((k, k));
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= k || p >= k {
            return Err(Error::DimensionMismatch(format!(
                "label pair ({t}, {p}) outside {k} classes"
            )));
        }
        cm[[t, p]] += 1;
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Classification report over one evaluation set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassStats>,
}

/// A report plus how the model got there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: ClassificationReport,
    pub train_time_s: f64,
    pub converged: bool,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class and support-weighted metrics. Any `0/0` is reported as 0.
pub fn weighted_report(cm: &ConfusionMatrix) -> Result<ClassificationReport> {
    let (k, k2) = cm.dim();
    if k != k2 {
        return Err(Error::DimensionMismatch(format!("confusion matrix is {k}x{k2}")));
    }
    let n: usize = cm.sum();
    if n == 0 {
        return Err(Error::Empty("confusion matrix has no samples".into()));
    }

    let per_class: Vec<ClassStats> = (0..k)
        .map(|c| {
            let tp = cm[[c, c]];
            let support = cm.row(c).sum();
            let predicted = cm.column(c).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassStats {
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();

    let weighted = |metric: fn(&ClassStats) -> f64| -> f64 {
        per_class
            .iter()
            .map(|s| s.support as f64 / n as f64 * metric(s))
            .sum()
    };
    let trace: usize = (0..k).map(|c| cm[[c, c]]).sum();

    Ok(ClassificationReport {
        accuracy: trace as f64 / n as f64,
        weighted_precision: weighted(|s| s.precision),
        weighted_recall: weighted(|s| s.recall),
        weighted_f1: weighted(|s| s.f1),
        per_class,
    })
}

/// Confusion matrix and weighted report in one step.
pub fn evaluate(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<ClassificationReport> {
    weighted_report(&confusion_matrix(y_true, y_pred, k)?)
}

/// Round half away from zero to two decimals, for display.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
