//! Evaluation metrics: MSE for regression, confusion-matrix rates and
//! rank-based AUC for classification.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{loss, TaskKind, WnnModel};
use crate::train::predict;

/// Metrics for one evaluation pass. Regression populates `mse`;
/// classification populates the rates, with `auc` absent when the test set
/// holds a single class.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub task: TaskKind,
    pub mse: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub auc: Option<f64>,
    pub n: usize,
    pub elapsed_s: f64,
    /// True when the test set held only one class, making one rate vacuous
    /// and AUC undefined.
    pub single_class: bool,
}

impl EvalReport {
    /// One `key=value` line with the fixed field names mse, sensitivity,
    /// specificity, auc, n, elapsed_s; absent metrics are skipped.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut push = |name: &str, v: Option<f64>| {
            if let Some(v) = v {
                if !out.is_empty() {
                    out.push(' ');
                }
                let _ = write!(out, "{name}={v}");
            }
        };
        push("mse", self.mse);
        push("sensitivity", self.sensitivity);
        push("specificity", self.specificity);
        push("auc", self.auc);
        let _ = write!(out, " n={} elapsed_s={:.6}", self.n, self.elapsed_s);
        if self.single_class {
            out.push_str(" single_class=true");
        }
        out
    }
}

/// Threshold-based confusion rates plus flags for vacuous cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionRates {
    pub sensitivity: f64,
    pub specificity: f64,
    /// No positive labels present; sensitivity is vacuously 1.
    pub no_positives: bool,
    /// No negative labels present; specificity is vacuously 1.
    pub no_negatives: bool,
}

/// Sensitivity TP/(TP+FN) and specificity TN/(TN+FP) with predicted
/// positive meaning score >= threshold. A class with no members yields a
/// vacuous rate of 1.0 and the matching flag.
pub fn confusion_rates(scores: &[f64], labels: &[f64], threshold: f64) -> Result<ConfusionRates> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "labels",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let (mut tp, mut fn_, mut tn, mut fp) = (0usize, 0usize, 0usize, 0usize);
    for (&score, &label) in scores.iter().zip(labels) {
        let predicted_positive = score >= threshold;
        if label >= 0.5 {
            if predicted_positive {
                tp += 1;
            } else {
                fn_ += 1;
            }
        } else if predicted_positive {
            fp += 1;
        } else {
            tn += 1;
        }
    }
    let no_positives = tp + fn_ == 0;
    let no_negatives = tn + fp == 0;
    Ok(ConfusionRates {
        sensitivity: if no_positives {
            1.0
        } else {
            tp as f64 / (tp + fn_) as f64
        },
        specificity: if no_negatives {
            1.0
        } else {
            tn as f64 / (tn + fp) as f64
        },
        no_positives,
        no_negatives,
    })
}

/// Rank-based (Mann-Whitney) AUC with midranks for tied scores:
/// (sum of positive ranks - n+(n+1)/2) / (n+ * n-). Equals the trapezoidal
/// area under the ROC curve and the probability a random positive outranks
/// a random negative, ties counting one half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "labels",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let n = scores.len();
    let positives = labels.iter().filter(|&&l| l >= 0.5).count();
    let negatives = n - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        // Tied block occupies ranks i+1..=j; everyone gets the midrank.
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            if labels[k] >= 0.5 {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }

    let npos = positives as f64;
    let nneg = negatives as f64;
    Ok((rank_sum_pos - npos * (npos + 1.0) / 2.0) / (npos * nneg))
}

/// Predict on a labelled set and assemble the task's metrics, recording the
/// sample count and wall time. A single-class classification set keeps its
/// vacuous confusion rates, drops AUC and sets the flag instead of failing.
pub fn evaluate(model: &WnnModel, xs: &Matrix, ys: &[f64]) -> Result<EvalReport> {
    let started = Instant::now();
    let scores = predict(model, xs)?;
    let report = match model.task() {
        TaskKind::Regression => EvalReport {
            task: TaskKind::Regression,
            mse: Some(loss(TaskKind::Regression, &scores, ys)?),
            sensitivity: None,
            specificity: None,
            auc: None,
            n: ys.len(),
            elapsed_s: 0.0,
            single_class: false,
        },
        TaskKind::Classification => {
            let rates = confusion_rates(&scores, ys, 0.5)?;
            let single_class = rates.no_positives || rates.no_negatives;
            let auc_value = if single_class {
                None
            } else {
                Some(auc(&scores, ys)?)
            };
            EvalReport {
                task: TaskKind::Classification,
                mse: None,
                sensitivity: Some(rates.sensitivity),
                specificity: Some(rates.specificity),
                auc: auc_value,
                n: ys.len(),
                elapsed_s: 0.0,
                single_class,
            }
        }
    };
    Ok(EvalReport {
        elapsed_s: started.elapsed().as_secs_f64(),
        ..report
    })
}
