mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{corpus_with_counts, write_simulated_probs};
use vulnstack::render::{SECTION_ENSEMBLE, SECTION_INDIVIDUAL, SECTION_STACKED};
use vulnstack::stacking::PipelineResult;
use vulnstack::synthetic::{complementary_corpus, marker_corpus};

fn vulnstack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vulnstack"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn prepare_writes_splits_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    corpus_with_counts(&[40, 30, 20, 20, 10]).write_jsonl(&corpus).unwrap();
    let out = dir.path().join("prepared");
    let o = vulnstack(&["prepare", "--corpus", p(&corpus), "--out", p(&out), "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in [
        "train.jsonl",
        "validation.jsonl",
        "test.jsonl",
        "split_manifest.json",
        "run_manifest.json",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    let text = stdout(&o);
    assert!(text.contains("CWE-476"));
    assert!(text
        .lines()
        .last()
        .unwrap()
        .split_whitespace()
        .eq(["Total", "96", "12", "12"]));
}

#[test]
fn prepare_reports_missing_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.jsonl");
    let o = vulnstack(&["prepare", "--corpus", p(&missing), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("corpus not found"), "{}", stderr(&o));
}

#[test]
fn prepare_with_reference_caps_reproduces_totals() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    corpus_with_counts(&[11420, 10990, 530, 5350, 10710])
        .write_jsonl(&corpus)
        .unwrap();
    let out = dir.path().join("prepared");
    let o = vulnstack(&[
        "prepare",
        "--corpus",
        p(&corpus),
        "--out",
        p(&out),
        "--caps",
        "5942,5777,249,2755,5582",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(
        text.lines()
            .last()
            .unwrap()
            .split_whitespace()
            .eq(["Total", "20305", "3900", "3900"]),
        "{text}"
    );
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn builtin_config(dir: &Path) -> std::path::PathBuf {
    complementary_corpus(600, 8)
        .corpus
        .write_jsonl(&dir.join("corpus.jsonl"))
        .unwrap();
    write_config(
        dir,
        r#"{
  "data": {"corpus": {"path": "corpus.jsonl"}},
  "base_models": [
    {"name": "T", "builtin": "hashed-token-softmax"},
    {"name": "H", "builtin": "char-ngram-softmax"}
  ],
  "meta": ["LR", "RF", "SVM", "XGBoost"]
}"#,
    )
}

/// Parses the rendered text table back into (model, five values) rows.
fn parse_table(text: &str) -> Vec<(String, Vec<f64>)> {
    let mut rows = Vec::new();
    for line in text.lines() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 6 {
            continue;
        }
        let tail = &fields[fields.len() - 5..];
        let values: Option<Vec<f64>> = tail.iter().map(|f| f.trim_end_matches('*').parse().ok()).collect();
        if let Some(values) = values {
            let name = fields[..fields.len() - 5].join(" ");
            rows.push((name, values));
        }
    }
    rows
}

#[test]
fn run_then_report_in_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let config = builtin_config(dir.path());
    let out = dir.path().join("run");
    let o = vulnstack(&["run", "--config", p(&config), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    for section in [SECTION_INDIVIDUAL, SECTION_STACKED, SECTION_ENSEMBLE] {
        assert!(table.contains(section));
    }
    for name in ["result.json", "selected_model.json", "table.txt", "run_manifest.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    assert!(out.join("reports").join("ensemble-stacking-t-h-lr.json").exists());

    let result_path = out.join("result.json");
    let result_text = std::fs::read_to_string(&result_path).unwrap();
    let result = PipelineResult::from_json(&result_text).unwrap();
    // 2 individual rows + 3 subsets x 4 meta-classifiers
    assert_eq!(result.individual.len(), 2);
    assert_eq!(result.cells.len(), 12);

    let parsed = parse_table(&table);
    let reports: Vec<_> = result
        .individual
        .iter()
        .map(|r| &r.test)
        .chain(result.cells.iter().map(|c| &c.test))
        .collect();
    assert_eq!(parsed.len(), 14);
    for ((name, values), report) in parsed.iter().zip(&reports) {
        assert_eq!(name, &report.model);
        let want = [
            report.accuracy,
            report.precision,
            report.recall,
            report.f1,
            report.auc_macro,
        ];
        for (got, w) in values.iter().zip(want) {
            assert!((got - w).abs() <= 0.005 + 1e-9, "{name}: {got} vs {w}");
        }
    }

    let csv = vulnstack(&["report", p(&result_path), "--render", "csv"]);
    assert!(csv.status.success());
    let csv_text = stdout(&csv);
    let mut lines = csv_text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "section,model,accuracy,precision,recall,f1,auc_macro,auc_weighted,averaging"
    );
    assert_eq!(lines.count(), 14);

    let json = vulnstack(&["report", p(&result_path), "--render", "json"]);
    assert_eq!(stdout(&json), result_text);

    let again = dir.path().join("again");
    let o = vulnstack(&["run", "--config", p(&config), "--out", p(&again)]);
    assert!(o.status.success());
    assert_eq!(
        std::fs::read(again.join("result.json")).unwrap(),
        result_text.as_bytes()
    );
}

#[test]
fn external_models_get_table_names() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = marker_corpus(500, 9);
    corpus.write_jsonl(&dir.path().join("corpus.jsonl")).unwrap();
    for (i, name) in ["C", "G", "U"].into_iter().enumerate() {
        write_simulated_probs(
            &dir.path().join(format!("{name}.jsonl")),
            name,
            &corpus,
            0.7 + 0.04 * i as f64,
            i as u64,
        );
    }
    let config = write_config(
        dir.path(),
        r#"{
  "data": {"corpus": {"path": "corpus.jsonl"}},
  "base_models": [
    {"name": "C", "probs": "C.jsonl"},
    {"name": "G", "probs": "G.jsonl"},
    {"name": "U", "probs": "U.jsonl"}
  ],
  "meta": ["LR"],
  "subsets": [["C", "G"], ["G", "U"], ["C", "G", "U"]]
}"#,
    );
    let o = vulnstack(&["run", "--config", p(&config), "--out", p(&dir.path().join("run"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    for label in [
        "Ensemble Stacking C+G (LR)",
        "Ensemble Stacking G+U (LR)",
        "Ensemble Stacking C+G+U (LR)",
    ] {
        assert!(table.contains(label), "{label}");
    }
}

#[test]
fn pipeline_failures_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    marker_corpus(500, 9)
        .write_jsonl(&dir.path().join("corpus.jsonl"))
        .unwrap();
    let partial = marker_corpus(400, 9);
    write_simulated_probs(&dir.path().join("C.jsonl"), "C", &partial, 0.8, 1);
    let config = write_config(
        dir.path(),
        r#"{"data": {"corpus": {"path": "corpus.jsonl"}}, "base_models": [{"name": "C", "probs": "C.jsonl"}]}"#,
    );
    let o = vulnstack(&["run", "--config", p(&config), "--out", p(&dir.path().join("run"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("meta_features"), "{}", stderr(&o));
}

#[test]
fn report_handles_empty_and_malformed_results() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"individual": [], "cells": []}"#).unwrap();
    let o = vulnstack(&["report", p(&empty)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "no rows\n");

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let o = vulnstack(&["report", p(&bad)]);
    assert!(!o.status.success());
}
