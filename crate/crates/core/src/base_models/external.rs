//! Probability tables produced outside this crate.
//!
//! Wire format (JSONL): a header line `{"model": <name>, "classes": 5}`
//! followed by one row per sample, `{"id": <string>, "probs": [p0, .., p4]}`.
//! Rows whose probabilities sum to within 1e-3 of one are renormalized; any
//! other sum, a negative entry, or a repeated id rejects the file. Rows that
//! already sum to one within 1e-12 are stored verbatim.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ProbVector;
use crate::corpus::NUM_CLASSES;
use crate::error::{Error, Result};

pub const RENORMALIZE_TOLERANCE: f64 = 1e-3;
// rows this close to one are already normalized at f64 precision; keeping
// them verbatim makes write/load round trips exact
const EXACT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    model: String,
    classes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    id: String,
    probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    model: String,
    rows: Vec<(String, ProbVector)>,
    index: HashMap<String, usize>,
}

impl ProbTable {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            rows: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, probs: ProbVector) -> Result<()> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.rows.len());
        self.rows.push((id, probs));
        Ok(())
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn get(&self, id: &str) -> Option<&ProbVector> {
        self.index.get(id).map(|&i| &self.rows[i].1)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &ProbVector)> {
        self.rows.iter().map(|(id, p)| (id.as_str(), p))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        serde_json::to_writer(
            &mut out,
            &Header {
                model: self.model.clone(),
                classes: NUM_CLASSES,
            },
        )?;
        out.push(b'\n');
        for (id, p) in &self.rows {
            serde_json::to_writer(
                &mut out,
                &Row {
                    id: id.clone(),
                    probs: p.as_slice().to_vec(),
                },
            )?;
            out.push(b'\n');
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&out).map_err(|e| Error::io(path, e))
    }
}

/// Loads and validates a probability file.
pub fn load_external_probs(path: &Path) -> Result<ProbTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let bad = |line: usize, message: String| Error::ProbFormat { line, message };

    let header: Header = loop {
        match lines.next() {
            None => return Err(bad(1, "missing header line".into())),
            Some((i, line)) => {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line).map_err(|e| bad(i + 1, format!("bad header: {e}")))?;
            }
        }
    };
    if header.classes != NUM_CLASSES {
        return Err(bad(
            1,
            format!("header declares {} classes, expected {NUM_CLASSES}", header.classes),
        ));
    }

    let mut table = ProbTable::new(header.model);
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| bad(lineno, e.to_string()))?;
        let probs = validate_row(&row.probs).map_err(|m| bad(lineno, format!("row `{}`: {m}", row.id)))?;
        table.insert(row.id, probs)?;
    }
    Ok(table)
}

fn validate_row(probs: &[f64]) -> std::result::Result<ProbVector, String> {
    let probs: [f64; NUM_CLASSES] = probs
        .try_into()
        .map_err(|_| format!("expected {NUM_CLASSES} probabilities, got {}", probs.len()))?;
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(format!("invalid probability {p}"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
        return Err(format!("probabilities sum to {sum}"));
    }
    if (sum - 1.0).abs() <= EXACT_TOLERANCE {
        Ok(ProbVector::from_array_unchecked(probs))
    } else {
        Ok(ProbVector::normalized(probs))
    }
}
