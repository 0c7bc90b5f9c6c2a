//! Meta-classifiers: learners that map concatenated base-model probabilities
//! to a final class distribution.
//!
//! All four operate on small dense matrices (one row per sample, `5K`
//! columns). A fitted [`MetaModel`] serializes to a self-describing JSON
//! document and reloads to bit-identical predictions.

pub mod boosting;
pub mod forest;
pub mod logistic;
pub mod svm;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use boosting::{BoostedModel, GbtParams};
pub use forest::{ForestModel, RfParams};
pub use logistic::{LogisticModel, LrParams};
pub use svm::{Gamma, SvmModel, SvmParams};

use crate::base_models::{argmax, ProbVector};
use crate::corpus::NUM_CLASSES;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// The four meta-classifier families, in selection tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetaKind {
    #[serde(rename = "LR")]
    Lr,
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "SVM")]
    Svm,
    #[serde(rename = "GBT", alias = "XGBoost")]
    Gbt,
}

impl MetaKind {
    pub const ALL: [MetaKind; 4] = [MetaKind::Lr, MetaKind::Rf, MetaKind::Svm, MetaKind::Gbt];

    /// Position in the tie-break order LR < RF < SVM < GBT.
    pub fn order(self) -> usize {
        self as usize
    }

    /// Short code used in configs and model files.
    pub fn code(self) -> &'static str {
        match self {
            MetaKind::Lr => "LR",
            MetaKind::Rf => "RF",
            MetaKind::Svm => "SVM",
            MetaKind::Gbt => "GBT",
        }
    }

    /// Label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            MetaKind::Gbt => "XGBoost",
            other => other.code(),
        }
    }
}

impl fmt::Display for MetaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MetaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LR" => Ok(MetaKind::Lr),
            "RF" => Ok(MetaKind::Rf),
            "SVM" => Ok(MetaKind::Svm),
            "GBT" | "XGBOOST" => Ok(MetaKind::Gbt),
            _ => Err(Error::Config(format!("unknown meta-classifier `{s}`"))),
        }
    }
}

/// Hyperparameters for every kind; only the one matching the fitted kind is
/// used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaParams {
    pub lr: LrParams,
    pub rf: RfParams,
    pub svm: SvmParams,
    pub gbt: GbtParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters")]
pub enum Fitted {
    #[serde(rename = "LR")]
    Lr(LogisticModel),
    #[serde(rename = "RF")]
    Rf(ForestModel),
    #[serde(rename = "SVM")]
    Svm(SvmModel),
    #[serde(rename = "GBT")]
    Gbt(BoostedModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaModel {
    pub schema_version: u32,
    pub n_features: usize,
    pub fitted: Fitted,
}

impl MetaModel {
    pub fn kind(&self) -> MetaKind {
        match self.fitted {
            Fitted::Lr(_) => MetaKind::Lr,
            Fitted::Rf(_) => MetaKind::Rf,
            Fitted::Svm(_) => MetaKind::Svm,
            Fitted::Gbt(_) => MetaKind::Gbt,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: MetaModel = serde_json::from_str(s)?;
        if model.schema_version != SCHEMA_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported meta model schema version {}",
                model.schema_version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    fn proba_row(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        match &self.fitted {
            Fitted::Lr(m) => m.predict_proba_row(x),
            Fitted::Rf(m) => m.predict_proba_row(x),
            Fitted::Svm(m) => m.predict_proba_row(x),
            Fitted::Gbt(m) => m.predict_proba_row(x),
        }
    }
}

fn check_matrix(data: &[Vec<f64>], n_features: Option<usize>) -> Result<usize> {
    let d = match n_features {
        Some(d) => d,
        None => data.first().map_or(0, Vec::len),
    };
    for (row, x) in data.iter().enumerate() {
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        if let Some(col) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(d)
}

/// Fits one meta-classifier on `data` (rows of equal length) and `labels`.
pub fn fit(kind: MetaKind, params: &MetaParams, data: &[Vec<f64>], labels: &[usize]) -> Result<MetaModel> {
    if data.len() != labels.len() {
        return Err(Error::LengthMismatch(data.len(), labels.len()));
    }
    let d = check_matrix(data, None)?;
    if d == 0 {
        return Err(Error::DegenerateTraining("no features".into()));
    }
    let mut present = [false; NUM_CLASSES];
    for &l in labels {
        if l >= NUM_CLASSES {
            return Err(Error::Invalid(format!("label {l} outside 0..=4")));
        }
        present[l] = true;
    }
    let n_present = present.iter().filter(|&&p| p).count();
    if n_present < 2 {
        return Err(Error::DegenerateTraining(format!(
            "meta-classifier needs at least 2 classes, found {n_present}"
        )));
    }
    let fitted = match kind {
        MetaKind::Lr => Fitted::Lr(logistic::fit(data, labels, &present, &params.lr)),
        MetaKind::Rf => Fitted::Rf(forest::fit(data, labels, &params.rf)),
        MetaKind::Svm => Fitted::Svm(svm::fit(data, labels, &present, &params.svm)?),
        MetaKind::Gbt => Fitted::Gbt(boosting::fit(data, labels, &present, &params.gbt)),
    };
    Ok(MetaModel {
        schema_version: SCHEMA_VERSION,
        n_features: d,
        fitted,
    })
}

pub fn predict_proba(model: &MetaModel, data: &[Vec<f64>]) -> Result<Vec<ProbVector>> {
    check_matrix(data, Some(model.n_features))?;
    Ok(data
        .iter()
        .map(|x| ProbVector::from_array_unchecked(model.proba_row(x)))
        .collect())
}

/// Argmax of [`predict_proba`], ties toward the smallest class index.
pub fn predict(model: &MetaModel, data: &[Vec<f64>]) -> Result<Vec<usize>> {
    Ok(predict_proba(model, data)?
        .iter()
        .map(|p| argmax(p.as_slice()))
        .collect())
}
