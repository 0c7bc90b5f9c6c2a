//! Evaluation metrics: confusion matrix, accuracy, support-weighted
//! precision/recall/F1 and one-vs-rest ROC AUC.
//!
//! Every metric is returned as a percentage in `[0, 100]`. Weighted recall is
//! `sum(TP) / N`, which is accuracy by construction.

use serde::{Deserialize, Serialize};

use crate::base_models::{argmax, ProbVector};
use crate::corpus::NUM_CLASSES;
use crate::error::{Error, Result};

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix(pub [[u64; NUM_CLASSES]; NUM_CLASSES]);

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.0[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.0.iter().map(|row| row[class]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|c| self.0[c][c]).sum()
    }
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::Invalid("no samples to evaluate".into()));
    }
    let mut counts = [[0u64; NUM_CLASSES]; NUM_CLASSES];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= NUM_CLASSES || p >= NUM_CLASSES {
            return Err(Error::Invalid(format!("label pair ({t}, {p}) outside 0..=4")));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix(counts))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: [ClassScores; NUM_CLASSES],
    pub warnings: Vec<String>,
}

pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<ClassificationMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Invalid("empty confusion matrix".into()));
    }
    let n = total as f64;
    let mut warnings = Vec::new();
    let mut per_class = [ClassScores {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        support: 0,
    }; NUM_CLASSES];
    let (mut precision, mut f1) = (0.0, 0.0);
    for (c, scores) in per_class.iter_mut().enumerate() {
        let tp = cm.0[c][c] as f64;
        let support = cm.support(c);
        let predicted = cm.predicted(c);
        let p = if predicted > 0 {
            tp / predicted as f64
        } else {
            if support > 0 {
                warnings.push(format!("precision of class {c} undefined (no predictions); set to 0"));
            }
            0.0
        };
        let r = if support > 0 {
            tp / support as f64
        } else {
            warnings.push(format!("recall of class {c} undefined (no true samples); set to 0"));
            0.0
        };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        *scores = ClassScores {
            precision: 100.0 * p,
            recall: 100.0 * r,
            f1: 100.0 * f,
            support,
        };
        let w = support as f64 / n;
        precision += w * p;
        f1 += w * f;
    }
    let accuracy = 100.0 * (cm.trace() as f64 / n);
    Ok(ClassificationMetrics {
        accuracy,
        precision: 100.0 * precision,
        recall: 100.0 * (cm.trace() as f64 / n),
        f1: 100.0 * f1,
        per_class,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AucAverage {
    Macro,
    Weighted,
}

/// Mann-Whitney AUC of `scores` for the `positive` mask, ties credited 0.5.
/// `None` when either side is empty.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of midranks (1-based) of the positives
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let midrank = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end].iter().filter(|&&i| positive[i]).count();
        rank_sum += midrank * pos_in_group as f64;
        start = end;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Per-class AUC; `None` for classes that are absent or make up every sample.
pub fn per_class_auc(y_true: &[usize], scores: &[ProbVector]) -> Result<[Option<f64>; NUM_CLASSES]> {
    if y_true.len() != scores.len() {
        return Err(Error::LengthMismatch(y_true.len(), scores.len()));
    }
    let mut out = [None; NUM_CLASSES];
    for (c, slot) in out.iter_mut().enumerate() {
        let column: Vec<f64> = scores.iter().map(|p| p.as_slice()[c]).collect();
        let positive: Vec<bool> = y_true.iter().map(|&y| y == c).collect();
        *slot = binary_auc(&column, &positive);
    }
    Ok(out)
}

fn average_auc(y_true: &[usize], per_class: &[Option<f64>; NUM_CLASSES], average: AucAverage) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (c, auc) in per_class.iter().enumerate() {
        if let Some(a) = auc {
            let w = match average {
                AucAverage::Macro => 1.0,
                AucAverage::Weighted => y_true.iter().filter(|&&y| y == c).count() as f64,
            };
            num += w * a;
            den += w;
        }
    }
    if den == 0.0 {
        return Err(Error::Invalid("AUC undefined: fewer than two classes in y_true".into()));
    }
    Ok(100.0 * num / den)
}

/// One-vs-rest AUC as a percentage. Every class must occur in `y_true`
/// without making up all of it.
pub fn auc_ovr(y_true: &[usize], scores: &[ProbVector], average: AucAverage) -> Result<f64> {
    let per_class = per_class_auc(y_true, scores)?;
    if let Some(c) = per_class.iter().position(Option::is_none) {
        if y_true.contains(&c) {
            return Err(Error::Invalid(format!("class {c} has no negatives for AUC")));
        }
        return Err(Error::MissingClass(c));
    }
    average_auc(y_true, &per_class, average)
}

/// As [`auc_ovr`], but classes without a defined AUC are left out and the
/// average renormalizes over the rest. Returns the skipped classes.
pub fn auc_ovr_allow_missing(
    y_true: &[usize],
    scores: &[ProbVector],
    average: AucAverage,
) -> Result<(f64, Vec<usize>)> {
    let per_class = per_class_auc(y_true, scores)?;
    let skipped = (0..NUM_CLASSES).filter(|&c| per_class[c].is_none()).collect();
    Ok((average_auc(y_true, &per_class, average)?, skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc_macro: f64,
    pub auc_weighted: f64,
    pub averaging: String,
    pub confusion: ConfusionMatrix,
    pub warnings: Vec<String>,
}

impl EvalReport {
    /// Value of a named metric: `accuracy`, `precision`, `recall`, `f1`,
    /// `auc` (macro) or `auc_weighted`.
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => Some(self.accuracy),
            "precision" => Some(self.precision),
            "recall" => Some(self.recall),
            "f1" => Some(self.f1),
            "auc" | "auc_macro" => Some(self.auc_macro),
            "auc_weighted" => Some(self.auc_weighted),
            _ => None,
        }
    }
}

/// Scores argmax predictions of `probs` against `y_true`.
///
/// Classes missing from `y_true` are left out of the AUC averages with a
/// warning rather than failing the whole report.
pub fn evaluate(model: &str, y_true: &[usize], probs: &[ProbVector]) -> Result<EvalReport> {
    if y_true.len() != probs.len() {
        return Err(Error::LengthMismatch(y_true.len(), probs.len()));
    }
    let y_pred: Vec<usize> = probs.iter().map(|p| argmax(p.as_slice())).collect();
    let cm = confusion_matrix(y_true, &y_pred)?;
    let m = classification_metrics(&cm)?;
    let (auc_macro, skipped) = auc_ovr_allow_missing(y_true, probs, AucAverage::Macro)?;
    let (auc_weighted, _) = auc_ovr_allow_missing(y_true, probs, AucAverage::Weighted)?;
    let mut warnings = m.warnings;
    for c in skipped {
        warnings.push(format!("AUC of class {c} undefined; excluded from averages"));
    }
    Ok(EvalReport {
        model: model.to_string(),
        accuracy: m.accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        auc_macro,
        auc_weighted,
        averaging: "weighted".into(),
        confusion: cm,
        warnings,
    })
}

/// Two-decimal rendering with ties to even, e.g. `12.125 -> "12.12"`.
pub fn format_pct(value: f64) -> String {
    format!("{:.2}", (value * 100.0).round_ties_even() / 100.0)
}
