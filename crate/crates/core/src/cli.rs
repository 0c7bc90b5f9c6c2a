//! Command-line front end: `prepare`, `run` and `report`.
//!
//! Exit codes: 0 on success, 1 when a pipeline stage fails, 2 for usage and
//! input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    clean, downsample, load_corpus, stratified_split, write_splits, Format, DEFAULT_RATIOS, NUM_CLASSES,
};
use crate::error::{Error, Result};
use crate::render::{render, render_distribution, RenderFormat};
use crate::stacking::{run_pipeline, DataSource, PipelineConfig, PipelineResult};

pub const EXIT_PIPELINE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "vulnstack",
    version,
    about = "Stacked ensembles for 5-class CWE vulnerability detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean, split and downsample a corpus into train/validation/test files.
    Prepare(PrepareArgs),
    /// Run the stacking pipeline described by a config file.
    Run(RunArgs),
    /// Render a saved result file.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// `jsonl` or `csv`; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_RATIOS)]
    pub ratios: Vec<f64>,
    /// Per-class training caps `c0,c1,c2,c3,c4`.
    #[arg(long, value_delimiter = ',')]
    pub caps: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Format of the table printed to stdout.
    #[arg(long, default_value = "text")]
    pub render: RenderFormat,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A `result.json` written by `run`.
    pub result: PathBuf,
    #[arg(long, default_value = "text")]
    pub render: RenderFormat,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Everything needed to reproduce a `prepare` or `run` invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seeds: Seeds,
    pub inputs: Vec<InputDigest>,
    pub tool_version: String,
    pub timings: Vec<StageTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub split: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svm: Option<u64>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn digest_file(path: &Path) -> Result<InputDigest> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(InputDigest {
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Lowercase ASCII file stem: `"Ensemble Stacking C+G (LR)"` becomes
/// `"ensemble-stacking-c-g-lr"`.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Stage { .. } => EXIT_PIPELINE,
        Error::NotFound(_)
        | Error::Config(_)
        | Error::InvalidRatios(_)
        | Error::MalformedRecord { .. }
        | Error::LabelOutOfRange { .. }
        | Error::DuplicateId(_)
        | Error::Stratification { .. }
        | Error::Json(_)
        | Error::Invalid(_) => EXIT_INPUT,
        _ => EXIT_PIPELINE,
    }
}

pub fn prepare(args: &PrepareArgs) -> Result<String> {
    let ratios: [f64; 3] = args
        .ratios
        .as_slice()
        .try_into()
        .map_err(|_| Error::InvalidRatios(args.ratios.clone()))?;
    let caps: Option<[usize; NUM_CLASSES]> = match &args.caps {
        Some(c) => Some(
            c.as_slice()
                .try_into()
                .map_err(|_| Error::Config("--caps takes five values".into()))?,
        ),
        None => None,
    };
    if !args.corpus.exists() {
        return Err(Error::NotFound(args.corpus.clone()));
    }
    let format = args
        .format
        .or_else(|| Format::from_path(&args.corpus))
        .unwrap_or(Format::Jsonl);
    let start = std::time::Instant::now();
    let corpus = load_corpus(&args.corpus, format)?;
    let cleaned = clean(&corpus);
    let mut splits = stratified_split(&cleaned, ratios, args.seed)?;
    if let Some(caps) = &caps {
        splits.train = downsample(&splits.train, caps, args.seed)?;
    }
    create_dir(&args.out)?;
    write_splits(&splits, &args.out)?;
    let table = render_distribution(
        &splits.train.distribution(),
        &splits.validation.distribution(),
        &splits.test.distribution(),
    );
    write_text(&args.out.join("distribution.txt"), &table)?;
    write_json(
        &args.out.join("distribution.json"),
        &serde_json::json!({
            "train": splits.train.distribution(),
            "validation": splits.validation.distribution(),
            "test": splits.test.distribution(),
            "removed_null_entries": corpus.len() - cleaned.len(),
        }),
    )?;
    let settings = serde_json::json!({
        "format": format,
        "ratios": ratios,
        "caps": caps,
        "seed": args.seed,
    });
    let manifest = RunManifest {
        command: "prepare".into(),
        config_hash: sha256_hex(&serde_json::to_vec(&settings)?),
        seeds: Seeds {
            split: args.seed,
            rf: None,
            svm: None,
        },
        inputs: vec![digest_file(&args.corpus)?],
        tool_version: env!("CARGO_PKG_VERSION").into(),
        timings: vec![StageTiming {
            stage: "prepare".into(),
            seconds: start.elapsed().as_secs_f64(),
        }],
    };
    write_json(&args.out.join("run_manifest.json"), &manifest)?;
    Ok(table)
}

fn config_inputs(config: &PipelineConfig) -> Vec<PathBuf> {
    let mut paths = Vec::new();
    match &config.data {
        Some(DataSource::Corpus { path, .. }) => paths.push(path.clone()),
        Some(DataSource::Prepared { dir }) => {
            paths.extend(["train", "validation", "test"].map(|s| dir.join(format!("{s}.jsonl"))));
        }
        None => {}
    }
    paths.extend(config.base_models.iter().filter_map(|b| b.probs.clone()));
    paths
}

pub fn run(args: &RunArgs) -> Result<String> {
    if !args.config.exists() {
        return Err(Error::NotFound(args.config.clone()));
    }
    let config = PipelineConfig::load(&args.config)?;
    let outcome = run_pipeline(&config)?;
    let result = &outcome.result;

    create_dir(&args.out)?;
    write_text(&args.out.join("result.json"), &result.to_json()?)?;
    let reports = args.out.join("reports");
    create_dir(&reports)?;
    for row in &result.individual {
        write_json(&reports.join(format!("{}.json", slug(&row.test.model))), &row.test)?;
    }
    for cell in &result.cells {
        write_json(&reports.join(format!("{}.json", slug(&cell.label))), &cell.test)?;
    }
    outcome.selected_model.save(&args.out.join("selected_model.json"))?;
    let table = render(result, RenderFormat::Text)?;
    write_text(&args.out.join("table.txt"), &table)?;

    let mut inputs = vec![digest_file(&args.config)?];
    for path in config_inputs(&config) {
        inputs.push(digest_file(&path)?);
    }
    let manifest = RunManifest {
        command: "run".into(),
        config_hash: config.hash(),
        seeds: Seeds {
            split: config.seed,
            rf: Some(config.meta_params.rf.seed),
            svm: Some(config.meta_params.svm.seed),
        },
        inputs,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        timings: outcome
            .stage_seconds
            .iter()
            .map(|(stage, seconds)| StageTiming {
                stage: stage.clone(),
                seconds: *seconds,
            })
            .collect(),
    };
    write_json(&args.out.join("run_manifest.json"), &manifest)?;
    render(result, args.render)
}

/// True when a result document carries no report rows at all.
fn has_no_rows(value: &serde_json::Value) -> bool {
    let empty = |key: &str| value.get(key).and_then(|v| v.as_array()).is_none_or(|a| a.is_empty());
    value.is_object() && empty("individual") && empty("cells")
}

pub fn report(args: &ReportArgs) -> Result<String> {
    if !args.result.exists() {
        return Err(Error::NotFound(args.result.clone()));
    }
    let text = fs::read_to_string(&args.result).map_err(|e| Error::io(&args.result, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let rendered = if has_no_rows(&value) {
        "no rows\n".to_string()
    } else {
        render(&PipelineResult::from_json(&text)?, args.render)?
    };
    match &args.out {
        Some(path) => {
            write_text(path, &rendered)?;
            Ok(String::new())
        }
        None => Ok(rendered),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Output goes to stdout, errors to stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Prepare(a) => prepare(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
