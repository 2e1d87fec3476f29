//! Confusion matrices and macro-averaged classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// K×K counts, rows are true classes and columns predicted classes.
pub type ConfusionMatrix = Vec<Vec<u64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Classes never predicted (precision 0/0, counted as 0).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined_precision: Vec<usize>,
    /// Classes absent from the labels (recall 0/0, counted as 0).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined_recall: Vec<usize>,
}

pub fn confusion_matrix(
    predictions: &[usize],
    labels: &[usize],
    num_classes: usize,
) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() || predictions.is_empty() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let mut m = vec![vec![0u64; num_classes]; num_classes];
    for (&p, &t) in predictions.iter().zip(labels) {
        for idx in [p, t] {
            if idx >= num_classes {
                return Err(Error::InvalidLabel {
                    label: idx,
                    classes: num_classes,
                });
            }
        }
        m[t][p] += 1;
    }
    Ok(m)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn classification_metrics(confusion: &ConfusionMatrix) -> Result<EvalMetrics> {
    let k = confusion.len();
    if k == 0 {
        return Err(Error::InvalidConfusion("empty matrix".into()));
    }
    if confusion.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidConfusion("matrix is not square".into()));
    }
    let total: u64 = confusion.iter().flatten().sum();
    if total == 0 {
        return Err(Error::InvalidConfusion("all-zero matrix".into()));
    }

    let diag: Vec<u64> = (0..k).map(|i| confusion[i][i]).collect();
    let row_sums: Vec<u64> = confusion.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..k).map(|j| confusion.iter().map(|r| r[j]).sum()).collect();

    let mut undefined_precision = Vec::new();
    let mut undefined_recall = Vec::new();
    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for i in 0..k {
        let p = ratio(diag[i], col_sums[i]).unwrap_or_else(|| {
            undefined_precision.push(i);
            0.0
        });
        let r = ratio(diag[i], row_sums[i]).unwrap_or_else(|| {
            undefined_recall.push(i);
            0.0
        });
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        p_sum += p;
        r_sum += r;
        f_sum += f;
    }

    Ok(EvalMetrics {
        confusion: confusion.clone(),
        accuracy: diag.iter().sum::<u64>() as f64 / total as f64,
        macro_precision: p_sum / k as f64,
        macro_recall: r_sum / k as f64,
        macro_f1: f_sum / k as f64,
        undefined_precision,
        undefined_recall,
    })
}

pub fn evaluate(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<EvalMetrics> {
    classification_metrics(&confusion_matrix(predictions, labels, num_classes)?)
}

/// Percentage with at most two decimals and no trailing zeros.
fn percent(v: f64) -> String {
    let s = format!("{:.2}", v * 100.0);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{s}%")
}

impl EvalMetrics {
    /// One line per quantity, in the usual results-table layout.
    pub fn table_cell(&self) -> String {
        format!(
            "Accuracy: {}\nPrecision: {}\nRecall: {}\nF1: {:.4}",
            percent(self.accuracy),
            percent(self.macro_precision),
            percent(self.macro_recall),
            self.macro_f1
        )
    }
}
