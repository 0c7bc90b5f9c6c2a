//! Pipeline configuration, one JSON document per run.
//!
//! ```json
//! {
//!   "data": { "corpus": { "path": "corpus.jsonl" } },
//!   "caps": [5942, 5777, 249, 2755, 5582],
//!   "seed": 7,
//!   "base_models": [
//!     { "name": "T", "builtin": "hashed-token-softmax" },
//!     { "name": "U", "probs": "probs/unixcoder.jsonl" }
//!   ],
//!   "meta": ["LR", "RF", "SVM", "GBT"],
//!   "selection_metric": "accuracy"
//! }
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::base_models::{BuiltinKind, SoftmaxConfig};
use crate::corpus::{validate_ratios, Format, DEFAULT_RATIOS, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::meta::{MetaKind, MetaParams};
use crate::metrics::EvalReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// A raw corpus, cleaned and split by the pipeline.
    Corpus {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<Format>,
    },
    /// A directory holding `train.jsonl`, `validation.jsonl` and `test.jsonl`.
    Prepared { dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<BuiltinKind>,
    /// Probability file in the external wire format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<PathBuf>,
    #[serde(default)]
    pub softmax: SoftmaxConfig,
}

impl BaseSpec {
    pub fn builtin(name: &str, kind: BuiltinKind) -> Self {
        Self {
            name: name.to_string(),
            builtin: Some(kind),
            probs: None,
            softmax: SoftmaxConfig::default(),
        }
    }

    pub fn external(name: &str, probs: impl Into<PathBuf>) -> Self {
        Self {
            name: name.to_string(),
            builtin: None,
            probs: Some(probs.into()),
            softmax: SoftmaxConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    #[default]
    Accuracy,
    F1,
    /// Macro-averaged one-vs-rest AUC.
    Auc,
}

impl SelectionMetric {
    pub fn name(self) -> &'static str {
        match self {
            SelectionMetric::Accuracy => "accuracy",
            SelectionMetric::F1 => "f1",
            SelectionMetric::Auc => "auc",
        }
    }

    pub fn of(self, report: &EvalReport) -> f64 {
        match self {
            SelectionMetric::Accuracy => report.accuracy,
            SelectionMetric::F1 => report.f1,
            SelectionMetric::Auc => report.auc_macro,
        }
    }
}

fn default_ratios() -> [f64; 3] {
    DEFAULT_RATIOS
}

fn default_seed() -> u64 {
    1
}

fn default_meta() -> Vec<MetaKind> {
    MetaKind::ALL.to_vec()
}

fn default_cv_folds() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Where the samples come from; absent when a corpus is passed in directly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSource>,
    #[serde(default = "default_ratios")]
    pub ratios: [f64; 3],
    /// Per-class training caps; no downsampling when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps: Option<[usize; NUM_CLASSES]>,
    /// Seed for splitting, downsampling and cross-validation folds.
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub base_models: Vec<BaseSpec>,
    #[serde(default = "default_meta")]
    pub meta: Vec<MetaKind>,
    #[serde(default)]
    pub meta_params: MetaParams,
    /// Base-model combinations to stack; every non-empty combination when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsets: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub selection_metric: SelectionMetric,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
}

impl PipelineConfig {
    /// Config with defaults for everything but the base models.
    pub fn new(base_models: Vec<BaseSpec>) -> Self {
        Self {
            data: None,
            ratios: DEFAULT_RATIOS,
            caps: None,
            seed: default_seed(),
            base_models,
            meta: default_meta(),
            meta_params: MetaParams::default(),
            subsets: None,
            selection_metric: SelectionMetric::default(),
            cv_folds: default_cv_folds(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let config: PipelineConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.data {
            Some(DataSource::Corpus { path, .. }) => fix(path),
            Some(DataSource::Prepared { dir }) => fix(dir),
            None => {}
        }
        for spec in &mut self.base_models {
            if let Some(p) = &mut spec.probs {
                fix(p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_models.is_empty() {
            return Err(Error::Config("at least one base model is required".into()));
        }
        if self.meta.is_empty() {
            return Err(Error::Config("at least one meta-classifier kind is required".into()));
        }
        let mut names = HashSet::new();
        for spec in &self.base_models {
            if spec.name.is_empty() || spec.name.contains('+') {
                return Err(Error::Config(format!("invalid base model name `{}`", spec.name)));
            }
            if !names.insert(spec.name.as_str()) {
                return Err(Error::Config(format!("duplicate base model `{}`", spec.name)));
            }
            if spec.builtin.is_some() == spec.probs.is_some() {
                return Err(Error::Config(format!(
                    "base model `{}` needs exactly one of `builtin` or `probs`",
                    spec.name
                )));
            }
        }
        let mut kinds = HashSet::new();
        for kind in &self.meta {
            if !kinds.insert(kind) {
                return Err(Error::Config(format!("meta-classifier {kind} listed twice")));
            }
        }
        for subset in self.subsets() {
            if subset.is_empty() {
                return Err(Error::Config("empty base model subset".into()));
            }
            let mut seen = HashSet::new();
            for name in &subset {
                if !names.contains(name.as_str()) {
                    return Err(Error::Config(format!("subset names unknown base model `{name}`")));
                }
                if !seen.insert(name) {
                    return Err(Error::Config(format!("subset lists `{name}` twice")));
                }
            }
        }
        validate_ratios(&self.ratios).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(caps) = &self.caps {
            if caps.contains(&0) {
                return Err(Error::Config("caps must be >= 1".into()));
            }
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be >= 2".into()));
        }
        Ok(())
    }

    /// Subsets to stack, each in base-model declaration order.
    pub fn subsets(&self) -> Vec<Vec<String>> {
        let names: Vec<&String> = self.base_models.iter().map(|b| &b.name).collect();
        match &self.subsets {
            Some(subsets) => subsets
                .iter()
                .map(|s| {
                    names
                        .iter()
                        .filter(|n| s.contains(n))
                        .map(|n| n.to_string())
                        .chain(
                            // unknown names survive so validation can report them
                            s.iter().filter(|x| !names.contains(x)).cloned(),
                        )
                        .collect()
                })
                .collect(),
            None => all_subsets(&names),
        }
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }
}

/// Non-empty subsets ordered by size, then lexicographically by position.
fn all_subsets(names: &[&String]) -> Vec<Vec<String>> {
    let n = names.len();
    let mut masks: Vec<u32> = (1..(1u32 << n)).collect();
    let positions = |m: u32| (0..n).filter(|i| m & (1 << i) != 0).collect::<Vec<_>>();
    masks.sort_by_key(|&m| (m.count_ones(), positions(m)));
    masks
        .into_iter()
        .map(|m| positions(m).into_iter().map(|i| names[i].clone()).collect())
        .collect()
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
