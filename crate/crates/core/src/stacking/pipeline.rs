//! End-to-end stacking run.
//!
//! Stages, in order:
//!
//! 1. `prepare`: clean and split the corpus (or load prepared splits), seal
//!    the test labels, downsample the training split.
//! 2. `train_base`: fit built-in base models on the training split, load
//!    external probability tables.
//! 3. `meta_features`: score validation and (unlabeled) test samples with
//!    every base model.
//! 4. `select`: for each (subset, meta kind) cell, stratified k-fold
//!    cross-validation on the validation meta-features; the best cell per
//!    subset and overall is chosen by the configured metric.
//! 5. `refit`: every cell is refit on the full validation meta-features and
//!    scores the test meta-features.
//! 6. `evaluate`: test labels are revealed and every row is scored.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::audit::{AuditEvent, AuditLog, SealedLabels};
use super::config::{hex, DataSource, PipelineConfig, SelectionMetric};
use super::{base_probabilities, cell_key, cell_label, select_index, MetaDataset};
use crate::base_models::{load_external_probs, train_builtin, BaseModel, ProbVector};
use crate::corpus::{
    clean, downsample, load_corpus, stratified_split, ClassDistribution, Corpus, Format, SplitSet, NUM_CLASSES,
};
use crate::error::{Error, Result, StageContext};
use crate::meta::{self, MetaKind, MetaModel, MetaParams};
use crate::metrics::{evaluate, EvalReport};
use crate::rng::SplitMix64;

pub const RESULT_SCHEMA_VERSION: u32 = 1;

const CV_STREAM: u64 = 0x4356_0000_0000_0000;

/// A base model scored on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualRow {
    pub name: String,
    pub kind: String,
    pub validation: EvalReport,
    pub test: EvalReport,
}

/// One (base-model subset, meta kind) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// `"C+G (LR)"`.
    pub key: String,
    /// `"Ensemble Stacking C+G (LR)"`.
    pub label: String,
    pub subset: Vec<String>,
    pub kind: MetaKind,
    /// Scored on out-of-fold predictions over the validation split.
    pub validation: EvalReport,
    /// Scored after refitting on the whole validation split.
    pub test: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub key: String,
    pub subset: Vec<String>,
    pub kind: MetaKind,
    pub metric: SelectionMetric,
    pub validation_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub train_downsampled: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub config_hash: String,
    /// SHA-256 over the cleaned samples in id order.
    pub data_digest: String,
    pub seed: u64,
    pub rf_seed: u64,
    pub svm_seed: u64,
    pub cv_folds: usize,
    pub model_order: Vec<String>,
    pub split_sizes: SplitSizes,
    pub train_distribution: ClassDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub schema_version: u32,
    pub individual: Vec<IndividualRow>,
    pub cells: Vec<Cell>,
    /// Best cell of each subset, in subset order.
    pub subset_selections: Vec<Selection>,
    pub selected: Selection,
    pub provenance: RunProvenance,
    pub audit: Vec<AuditEvent>,
}

impl PipelineResult {
    /// Pretty JSON; identical inputs give identical bytes.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn cell(&self, key: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.key == key)
    }
}

/// A finished run: the serializable result plus fitted models and timings.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub result: PipelineResult,
    pub selected_model: MetaModel,
    pub base_models: Vec<BaseModel>,
    /// Wall-clock seconds per stage; kept out of the result so reruns compare
    /// byte for byte.
    pub stage_seconds: Vec<(String, f64)>,
}

/// Runs on the data source named in `config`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    match &config.data {
        Some(DataSource::Corpus { path, format }) => {
            let format = format.or_else(|| Format::from_path(path)).unwrap_or(Format::Jsonl);
            let corpus = load_corpus(path, format).stage("prepare")?;
            run_on_corpus(&corpus, config)
        }
        Some(DataSource::Prepared { dir }) => {
            let load = |name: &str| load_corpus(&dir.join(format!("{name}.jsonl")), Format::Jsonl).map(|c| clean(&c));
            let splits = SplitSet {
                train: load("train").stage("prepare")?,
                validation: load("validation").stage("prepare")?,
                test: load("test").stage("prepare")?,
                seed: config.seed,
                ratios: config.ratios,
            };
            run_on_splits(splits, config)
        }
        None => Err(Error::Config("config has no `data` source".into())),
    }
}

/// Cleans and splits `corpus`, then runs every stage.
pub fn run_on_corpus(corpus: &Corpus, config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let cleaned = clean(corpus);
    let splits = stratified_split(&cleaned, config.ratios, config.seed).stage("prepare")?;
    run_on_splits(splits, config)
}

/// Runs `config` with `subsets` as the stacked combinations. All cells share
/// one split and one training of each base model.
pub fn ablation_sweep(config: &PipelineConfig, subsets: Vec<Vec<String>>) -> Result<PipelineOutcome> {
    let mut config = config.clone();
    config.subsets = Some(subsets);
    run_pipeline(&config)
}

fn data_digest(parts: &[&Corpus]) -> String {
    let mut samples: Vec<_> = parts.iter().flat_map(|c| c.iter()).collect();
    samples.sort_by(|a, b| a.id.cmp(&b.id));
    let mut hasher = Sha256::new();
    for s in samples {
        hasher.update(s.id.as_bytes());
        hasher.update([0]);
        hasher.update(s.code.as_bytes());
        hasher.update([0]);
        hasher.update(s.label.map_or(String::new(), |l| l.to_string()).as_bytes());
        hasher.update(b"\n");
    }
    hex(&hasher.finalize())
}

struct Timer {
    stages: Vec<(String, f64)>,
    current: Option<(String, Instant)>,
}

impl Timer {
    fn enter(&mut self, log: &AuditLog, stage: &str) {
        self.finish();
        log.enter(stage);
        self.current = Some((stage.to_string(), Instant::now()));
    }

    fn finish(&mut self) {
        if let Some((name, start)) = self.current.take() {
            self.stages.push((name, start.elapsed().as_secs_f64()));
        }
    }
}

/// Stratified fold of each row: classes are dealt round-robin over folds after
/// a seeded shuffle of their (id-ordered) members.
fn cv_folds(labels: &[usize], ids: &[&str], k: usize, seed: u64) -> Vec<usize> {
    let mut fold = vec![0; labels.len()];
    for class in 0..NUM_CLASSES {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.sort_by(|&a, &b| ids[a].cmp(ids[b]));
        SplitMix64::derive(seed, CV_STREAM + class as u64).shuffle(&mut members);
        for (pos, &i) in members.iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    fold
}

fn cross_validate(
    kind: MetaKind,
    params: &MetaParams,
    z: &[Vec<f64>],
    y: &[usize],
    fold: &[usize],
    k: usize,
) -> Result<Vec<ProbVector>> {
    let mut out = vec![ProbVector::uniform(); z.len()];
    for f in 0..k {
        let train: Vec<usize> = (0..z.len()).filter(|&i| fold[i] != f).collect();
        let held: Vec<usize> = (0..z.len()).filter(|&i| fold[i] == f).collect();
        if held.is_empty() {
            continue;
        }
        let tz: Vec<Vec<f64>> = train.iter().map(|&i| z[i].clone()).collect();
        let ty: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        let model = meta::fit(kind, params, &tz, &ty)?;
        let hz: Vec<Vec<f64>> = held.iter().map(|&i| z[i].clone()).collect();
        for (&i, p) in held.iter().zip(meta::predict_proba(&model, &hz)?) {
            out[i] = p;
        }
    }
    Ok(out)
}

struct CellPlan {
    subset: Vec<String>,
    kind: MetaKind,
    validation: MetaDataset,
    test: MetaDataset,
}

/// Runs every stage on existing splits; the test split may carry labels, which
/// are sealed before any model sees the data.
pub fn run_on_splits(splits: SplitSet, config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let log = AuditLog::new();
    let mut timer = Timer {
        stages: Vec::new(),
        current: None,
    };

    timer.enter(&log, "prepare");
    let digest = data_digest(&[&splits.train, &splits.validation, &splits.test]);
    let SplitSet {
        train,
        validation,
        test,
        ..
    } = splits;
    let sealed = SealedLabels::seal(test.labels().stage("prepare")?);
    let test = test.without_labels();
    let train_full = train.len();
    let train = match &config.caps {
        Some(caps) => downsample(&train, caps, config.seed).stage("prepare")?,
        None => train,
    };
    let y_val = validation.labels().stage("prepare")?;

    timer.enter(&log, "train_base");
    let base_models = config
        .base_models
        .iter()
        .map(|spec| match (&spec.builtin, &spec.probs) {
            (Some(kind), _) => train_builtin(&spec.name, *kind, &train, &spec.softmax),
            (None, Some(path)) => load_probs(&spec.name, path),
            (None, None) => unreachable!("validated config"),
        })
        .collect::<Result<Vec<_>>>()
        .stage("train_base")?;

    timer.enter(&log, "meta_features");
    let val_probs = base_models
        .iter()
        .map(|m| base_probabilities(m, &validation))
        .collect::<Result<Vec<_>>>()
        .stage("meta_features")?;
    let test_probs = base_models
        .iter()
        .map(|m| base_probabilities(m, &test))
        .collect::<Result<Vec<_>>>()
        .stage("meta_features")?;
    let names: Vec<String> = base_models.iter().map(|m| m.name().to_string()).collect();
    let subsets = config.subsets();
    let mut plans = Vec::new();
    for subset in &subsets {
        let idx: Vec<usize> = subset
            .iter()
            .map(|n| names.iter().position(|m| m == n).unwrap())
            .collect();
        let pick = |all: &[Vec<ProbVector>]| idx.iter().map(|&k| all[k].clone()).collect::<Vec<_>>();
        let (v, t) = (pick(&val_probs), pick(&test_probs));
        let v_views: Vec<&[ProbVector]> = v.iter().map(Vec::as_slice).collect();
        let t_views: Vec<&[ProbVector]> = t.iter().map(Vec::as_slice).collect();
        for &kind in &config.meta {
            plans.push(CellPlan {
                subset: subset.clone(),
                kind,
                validation: MetaDataset::from_parts(subset.clone(), &validation, &v_views),
                test: MetaDataset::from_parts(subset.clone(), &test, &t_views),
            });
        }
    }

    timer.enter(&log, "select");
    let val_ids: Vec<&str> = validation.iter().map(|s| s.id.as_str()).collect();
    let fold = cv_folds(&y_val, &val_ids, config.cv_folds, config.seed);
    let cv_reports = plans
        .par_iter()
        .map(|plan| {
            let oof = cross_validate(
                plan.kind,
                &config.meta_params,
                &plan.validation.matrix(),
                &y_val,
                &fold,
                config.cv_folds,
            )?;
            evaluate(&cell_label(&plan.subset, plan.kind), &y_val, &oof)
        })
        .collect::<Result<Vec<_>>>()
        .stage("select")?;
    let metric = config.selection_metric;
    let selection_of = |i: usize| Selection {
        key: cell_key(&plans[i].subset, plans[i].kind),
        subset: plans[i].subset.clone(),
        kind: plans[i].kind,
        metric,
        validation_score: metric.of(&cv_reports[i]),
    };
    let subset_selections: Vec<Selection> = plans
        .chunks(config.meta.len())
        .enumerate()
        .map(|(s, chunk)| {
            let offset = s * config.meta.len();
            let best = select_index(
                chunk
                    .iter()
                    .enumerate()
                    .map(|(j, p)| (p.kind, metric.of(&cv_reports[offset + j]))),
            )
            .expect("non-empty meta list");
            selection_of(offset + best)
        })
        .collect();
    let overall = select_index(plans.iter().zip(&cv_reports).map(|(p, r)| (p.kind, metric.of(r))))
        .ok_or(Error::EmptyCandidates)
        .stage("select")?;
    let selected = selection_of(overall);

    timer.enter(&log, "refit");
    let refit = plans
        .par_iter()
        .map(|plan| {
            let model = meta::fit(plan.kind, &config.meta_params, &plan.validation.matrix(), &y_val)?;
            let probs = meta::predict_proba(&model, &plan.test.matrix())?;
            Ok((model, probs))
        })
        .collect::<Result<Vec<_>>>()
        .stage("refit")?;

    timer.enter(&log, "evaluate");
    let y_test = sealed.reveal(&log, "evaluate");
    let individual = base_models
        .iter()
        .zip(val_probs.iter().zip(&test_probs))
        .map(|(m, (vp, tp))| {
            Ok(IndividualRow {
                name: m.name().to_string(),
                kind: m.kind_name().to_string(),
                validation: evaluate(m.name(), &y_val, vp)?,
                test: evaluate(m.name(), y_test, tp)?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .stage("evaluate")?;
    let cells = plans
        .iter()
        .zip(cv_reports)
        .zip(&refit)
        .map(|((plan, validation), (_, probs))| {
            let label = cell_label(&plan.subset, plan.kind);
            Ok(Cell {
                key: cell_key(&plan.subset, plan.kind),
                test: evaluate(&label, y_test, probs)?,
                label,
                subset: plan.subset.clone(),
                kind: plan.kind,
                validation,
            })
        })
        .collect::<Result<Vec<_>>>()
        .stage("evaluate")?;
    timer.finish();

    let selected_model = refit[overall].0.clone();
    let result = PipelineResult {
        schema_version: RESULT_SCHEMA_VERSION,
        individual,
        cells,
        subset_selections,
        selected,
        provenance: RunProvenance {
            config_hash: config.hash(),
            data_digest: digest,
            seed: config.seed,
            rf_seed: config.meta_params.rf.seed,
            svm_seed: config.meta_params.svm.seed,
            cv_folds: config.cv_folds,
            model_order: names,
            split_sizes: SplitSizes {
                train: train_full,
                train_downsampled: train.len(),
                validation: validation.len(),
                test: test.len(),
            },
            train_distribution: train.distribution(),
        },
        audit: log.events(),
    };
    Ok(PipelineOutcome {
        result,
        selected_model,
        base_models,
        stage_seconds: timer.stages,
    })
}

fn load_probs(name: &str, path: &Path) -> Result<BaseModel> {
    Ok(BaseModel::external(name, load_external_probs(path)?))
}
