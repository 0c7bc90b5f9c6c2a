//! Stacking: meta-feature construction, meta-classifier selection and the
//! end-to-end train / select / evaluate pipeline.

pub mod audit;
pub mod config;
pub mod pipeline;

use serde::{Deserialize, Serialize};

pub use audit::{AuditEvent, AuditLog, SealedLabels};
pub use config::{BaseSpec, DataSource, PipelineConfig, SelectionMetric};
pub use pipeline::{
    ablation_sweep, run_on_corpus, run_on_splits, run_pipeline, Cell, IndividualRow, PipelineOutcome, PipelineResult,
    Selection,
};

use crate::base_models::{BaseModel, ProbVector};
use crate::corpus::{Corpus, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::meta::{MetaKind, MetaModel};
use crate::metrics::EvalReport;

/// One sample's concatenated base-model probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaFeature {
    pub id: String,
    pub z: Vec<f64>,
    pub label: Option<usize>,
}

/// Meta-features for a corpus, with the base-model order that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaDataset {
    pub model_order: Vec<String>,
    pub rows: Vec<MetaFeature>,
}

impl MetaDataset {
    /// Concatenates `per_model[k][i]` over `k` for each sample `i` of `corpus`.
    pub(crate) fn from_parts(model_order: Vec<String>, corpus: &Corpus, per_model: &[&[ProbVector]]) -> Self {
        let rows = corpus
            .iter()
            .enumerate()
            .map(|(i, s)| MetaFeature {
                id: s.id.clone(),
                z: per_model.iter().flat_map(|p| p[i].as_slice().iter().copied()).collect(),
                label: s.label,
            })
            .collect();
        Self { model_order, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row width, `5K`.
    pub fn width(&self) -> usize {
        NUM_CLASSES * self.model_order.len()
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.z.clone()).collect()
    }

    /// Labels in row order; fails on the first unlabeled row.
    pub fn labels(&self) -> Result<Vec<usize>> {
        self.rows
            .iter()
            .map(|r| r.label.ok_or_else(|| Error::Unlabeled(r.id.clone())))
            .collect()
    }
}

/// Scores every sample of `corpus` with each model.
pub fn base_probabilities(model: &BaseModel, corpus: &Corpus) -> Result<Vec<ProbVector>> {
    let missing = model.missing_ids(corpus);
    if !missing.is_empty() {
        return Err(Error::MissingProbabilities {
            model: model.name().to_string(),
            ids: missing,
        });
    }
    corpus.iter().map(|s| model.predict_proba_base(s)).collect()
}

/// Row `i` is the concatenation of every model's distribution for sample `i`,
/// in the order of `models`.
pub fn build_meta_features(models: &[&BaseModel], corpus: &Corpus) -> Result<MetaDataset> {
    if models.is_empty() {
        return Err(Error::Invalid("at least one base model is required".into()));
    }
    let probs = models
        .iter()
        .map(|m| base_probabilities(m, corpus))
        .collect::<Result<Vec<_>>>()?;
    let views: Vec<&[ProbVector]> = probs.iter().map(Vec::as_slice).collect();
    let order = models.iter().map(|m| m.name().to_string()).collect();
    Ok(MetaDataset::from_parts(order, corpus, &views))
}

/// `"C+G (LR)"`.
pub fn cell_key(subset: &[String], kind: MetaKind) -> String {
    format!("{} ({})", subset.join("+"), kind.label())
}

/// Table label: `"Stacking C (LR)"` for one base model, `"Ensemble Stacking
/// C+G (LR)"` for several.
pub fn cell_label(subset: &[String], kind: MetaKind) -> String {
    let prefix = if subset.len() == 1 {
        "Stacking"
    } else {
        "Ensemble Stacking"
    };
    format!("{prefix} {}", cell_key(subset, kind))
}

/// Index of the best `(kind, score)` pair: highest score, then earlier kind
/// in the order LR < RF < SVM < GBT, then earlier position.
pub(crate) fn select_index(candidates: impl IntoIterator<Item = (MetaKind, f64)>) -> Option<usize> {
    let mut best: Option<(usize, MetaKind, f64)> = None;
    for (i, (kind, score)) in candidates.into_iter().enumerate() {
        let better = match best {
            None => true,
            Some((_, bk, bs)) => score > bs || (score == bs && kind.order() < bk.order()),
        };
        if better {
            best = Some((i, kind, score));
        }
    }
    best.map(|(i, _, _)| i)
}

/// The candidate whose validation report maximizes `metric`.
pub fn select_meta(candidates: &[(MetaModel, EvalReport)], metric: SelectionMetric) -> Result<&MetaModel> {
    let idx = select_index(candidates.iter().map(|(m, r)| (m.kind(), metric.of(r)))).ok_or(Error::EmptyCandidates)?;
    Ok(&candidates[idx].0)
}
