//! Text, CSV and JSON renderings of pipeline results and class distributions.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::corpus::{ClassDistribution, CLASS_NAMES};
use crate::error::{Error, Result};
use crate::metrics::{format_pct, EvalReport};
use crate::stacking::PipelineResult;

pub const SECTION_INDIVIDUAL: &str = "Individual Models";
pub const SECTION_STACKED: &str = "Stacked Models with Individual Base Models";
pub const SECTION_ENSEMBLE: &str = "Ensemble Stacking Models";

/// Marks the best value of each column in the text table.
pub const BEST_MARK: char = '*';

const COLUMNS: [&str; 5] = [
    "Accuracy (%)",
    "Precision (%)",
    "Recall (%)",
    "F1-Score (%)",
    "AUC-Score (%)",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Text,
    Json,
    Csv,
}

impl FromStr for RenderFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(RenderFormat::Text),
            "json" => Ok(RenderFormat::Json),
            "csv" => Ok(RenderFormat::Csv),
            other => Err(Error::Invalid(format!(
                "unknown render format `{other}` (text|json|csv)"
            ))),
        }
    }
}

pub fn render(result: &PipelineResult, format: RenderFormat) -> Result<String> {
    match format {
        RenderFormat::Text => Ok(render_text(result)),
        RenderFormat::Json => result.to_json(),
        RenderFormat::Csv => render_csv(result),
    }
}

/// Test-split rows grouped into the three table sections, in result order.
pub fn sections(result: &PipelineResult) -> Vec<(&'static str, Vec<&EvalReport>)> {
    let individual = result.individual.iter().map(|r| &r.test).collect();
    let (single, ensemble): (Vec<_>, Vec<_>) = result.cells.iter().partition(|c| c.subset.len() == 1);
    vec![
        (SECTION_INDIVIDUAL, individual),
        (SECTION_STACKED, single.into_iter().map(|c| &c.test).collect()),
        (SECTION_ENSEMBLE, ensemble.into_iter().map(|c| &c.test).collect()),
    ]
}

fn values(r: &EvalReport) -> [f64; 5] {
    [r.accuracy, r.precision, r.recall, r.f1, r.auc_macro]
}

/// Fixed-width table of test metrics. The best rendered value in each column
/// is followed by `*`; AUC is the macro average.
pub fn render_text(result: &PipelineResult) -> String {
    let sections = sections(result);
    let rows: Vec<&EvalReport> = sections.iter().flat_map(|(_, r)| r.iter().copied()).collect();
    if rows.is_empty() {
        return "no rows\n".to_string();
    }
    let mut best = [
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
    ];
    for (col, slot) in best.iter_mut().enumerate() {
        let top = rows.iter().map(|r| values(r)[col]).fold(f64::NEG_INFINITY, f64::max);
        *slot = format_pct(top);
    }
    let name_width = rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
    let col_width = COLUMNS.iter().map(|c| c.len()).max().unwrap();

    let mut out = String::new();
    let header = format!(
        "{:<name_width$}  {}",
        "Model",
        COLUMNS.map(|c| format!("{c:>col_width$}")).join("  ")
    );
    let rule = "-".repeat(header.len());
    for (title, reports) in &sections {
        if reports.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{title}");
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "{rule}");
        for r in reports {
            let cells: Vec<String> = values(r)
                .iter()
                .zip(&best)
                .map(|(v, b)| {
                    let s = format_pct(*v);
                    let mark = if &s == b { BEST_MARK } else { ' ' };
                    format!("{:>w$}", format!("{s}{mark}"), w = col_width)
                })
                .collect();
            let _ = writeln!(out, "{:<name_width$}  {}", r.model, cells.join("  "));
        }
        out.push('\n');
    }
    let s = &result.selected;
    let _ = writeln!(
        out,
        "Selected: {}, cross-validated {} {}",
        s.key,
        s.metric.name(),
        format_pct(s.validation_score)
    );
    out
}

/// One row per report: the section, then the report fields.
pub fn render_csv(result: &PipelineResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record([
        "section",
        "model",
        "accuracy",
        "precision",
        "recall",
        "f1",
        "auc_macro",
        "auc_weighted",
        "averaging",
    ])
    .map_err(csv_err)?;
    for (title, reports) in sections(result) {
        for r in reports {
            w.write_record([
                title.to_string(),
                r.model.clone(),
                r.accuracy.to_string(),
                r.precision.to_string(),
                r.recall.to_string(),
                r.f1.to_string(),
                r.auc_macro.to_string(),
                r.auc_weighted.to_string(),
                r.averaging.clone(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Per-class sample counts of the three splits with a totals row.
pub fn render_distribution(
    train: &ClassDistribution,
    validation: &ClassDistribution,
    test: &ClassDistribution,
) -> String {
    let name_width = CLASS_NAMES.iter().map(|n| n.len()).max().unwrap();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<5}  {:<name_width$}  {:>8}  {:>10}  {:>8}",
        "Label", "Vulnerability Type", "Training", "Validation", "Test"
    );
    for (c, name) in CLASS_NAMES.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<5}  {:<name_width$}  {:>8}  {:>10}  {:>8}",
            c, name, train.counts[c], validation.counts[c], test.counts[c]
        );
    }
    let _ = writeln!(
        out,
        "{:<5}  {:<name_width$}  {:>8}  {:>10}  {:>8}",
        "", "Total", train.total, validation.total, test.total
    );
    out
}
