//! Labeled code corpora: ingestion, cleaning, stratified splitting and
//! per-class downsampling.
//!
//! Splitting and downsampling are keyed on sample ids, never on input
//! position: class members are sorted by id before any random draw, and split
//! members are emitted in id order. Permuting the input file therefore yields
//! the same splits for the same seed.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Number of vulnerability classes.
pub const NUM_CLASSES: usize = 5;

/// CWE category for each class label.
pub const CLASS_NAMES: [&str; NUM_CLASSES] = [
    "CWE-119 (Memory)",
    "CWE-120 (Buffer Overflow)",
    "CWE-469 (Integer Overflow)",
    "CWE-476 (Null Pointer)",
    "CWE-other",
];

/// Per-class training caps that reproduce the reference training distribution.
pub const REFERENCE_TRAIN_CAPS: [usize; NUM_CLASSES] = [5942, 5777, 249, 2755, 5582];

// stream offsets so split and downsample draws never share a stream
const SPLIT_STREAM: u64 = 0x5350_4c54_0000_0000;
const DOWNSAMPLE_STREAM: u64 = 0x444f_574e_0000_0000;

/// One labeled code snippet.
///
/// `label` is `None` only for null entries read from disk; [`clean`] drops
/// those, and every downstream operation requires it to be set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSample {
    pub id: String,
    pub code: String,
    pub label: Option<usize>,
}

impl CodeSample {
    pub fn new(id: impl Into<String>, code: impl Into<String>, label: usize) -> Self {
        assert!(label < NUM_CLASSES, "label {label} out of range");
        Self {
            id: id.into(),
            code: code.into(),
            label: Some(label),
        }
    }

    pub fn require_label(&self) -> Result<usize> {
        self.label.ok_or_else(|| Error::Unlabeled(self.id.clone()))
    }

    fn is_null_entry(&self) -> bool {
        self.label.is_none() || self.code.trim().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "jsonl" | "json" => Some(Format::Jsonl),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Invalid(format!("unknown corpus format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub format: String,
}

/// An ordered collection of samples with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    samples: Vec<CodeSample>,
    provenance: Provenance,
}

impl Corpus {
    pub fn new(samples: Vec<CodeSample>, provenance: Provenance) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if let Some(label) = s.label {
                if label >= NUM_CLASSES {
                    return Err(Error::Invalid(format!(
                        "sample `{}` has label {label} outside 0..=4",
                        s.id
                    )));
                }
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        Ok(Self { samples, provenance })
    }

    /// In-memory corpus tagged with `source`.
    pub fn from_samples(source: &str, samples: Vec<CodeSample>) -> Result<Self> {
        Self::new(
            samples,
            Provenance {
                source: source.to_string(),
                format: "memory".to_string(),
            },
        )
    }

    // members of an existing corpus; uniqueness already holds
    fn derived(&self, samples: Vec<CodeSample>, tag: &str) -> Corpus {
        Corpus {
            samples,
            provenance: Provenance {
                source: format!("{}#{tag}", self.provenance.source),
                format: self.provenance.format.clone(),
            },
        }
    }

    pub fn samples(&self) -> &[CodeSample] {
        &self.samples
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CodeSample> {
        self.samples.iter()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.samples.iter().map(|s| s.id.as_str()).collect()
    }

    /// Labels in corpus order; fails on the first unlabeled sample.
    pub fn labels(&self) -> Result<Vec<usize>> {
        self.samples.iter().map(CodeSample::require_label).collect()
    }

    /// Class counts of labeled samples.
    pub fn distribution(&self) -> ClassDistribution {
        let mut counts = [0usize; NUM_CLASSES];
        for label in self.samples.iter().filter_map(|s| s.label) {
            counts[label] += 1;
        }
        ClassDistribution::from_counts(counts)
    }

    /// Copy with every label removed.
    pub fn without_labels(&self) -> Corpus {
        let samples = self
            .samples
            .iter()
            .map(|s| CodeSample {
                label: None,
                ..s.clone()
            })
            .collect();
        self.derived(samples, "unlabeled")
    }

    /// Writes the corpus as canonical JSONL.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for s in &self.samples {
            let label = s.require_label()?;
            let line = serde_json::json!({ "id": s.id, "code": s.code, "label": label });
            serde_json::to_writer(&mut out, &line)?;
            out.push(b'\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a CodeSample;
    type IntoIter = std::slice::Iter<'a, CodeSample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub counts: [usize; NUM_CLASSES],
    pub total: usize,
}

impl ClassDistribution {
    pub fn from_counts(counts: [usize; NUM_CLASSES]) -> Self {
        Self {
            counts,
            total: counts.iter().sum(),
        }
    }
}

/// Reads a corpus in the declared format.
///
/// JSONL records are objects with keys `id` (string), `code` (string) and
/// `label` (integer 0..=4); CSV files carry the header `id,code,label`. A
/// `null` code or label (an empty cell in CSV) loads as a null entry for
/// [`clean`] to remove. A missing key, a non-integer label or a label outside
/// 0..=4 rejects the whole file with the offending line number.
pub fn load_corpus(path: &Path, format: Format) -> Result<Corpus> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let samples = match format {
        Format::Jsonl => read_jsonl(path)?,
        Format::Csv => read_csv(path)?,
    };
    Corpus::new(
        samples,
        Provenance {
            source: path.display().to_string(),
            format: format.to_string(),
        },
    )
}

fn read_jsonl(path: &Path) -> Result<Vec<CodeSample>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::MalformedRecord { line: lineno, message };
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| malformed("record is not a JSON object".into()))?;

        let id = match obj.get("id") {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(_) => return Err(malformed("`id` must be a string".into())),
            None => return Err(malformed("missing field `id`".into())),
        };
        let code = match obj.get("code") {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(serde_json::Value::Null) => String::new(),
            Some(_) => return Err(malformed("`code` must be a string".into())),
            None => return Err(malformed("missing field `code`".into())),
        };
        let label = match obj.get("label") {
            Some(serde_json::Value::Null) => None,
            Some(v) => {
                let raw = v
                    .as_i64()
                    .ok_or_else(|| malformed(format!("`label` must be an integer, got {v}")))?;
                Some(check_label(raw, lineno)?)
            }
            None => return Err(malformed("missing field `label`".into())),
        };
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        samples.push(CodeSample { id, code, label });
    }
    Ok(samples)
}

fn read_csv(path: &Path) -> Result<Vec<CodeSample>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MalformedRecord {
                line: 1,
                message: format!("missing column `{name}` in header"),
            })
    };
    let (id_col, code_col, label_col) = (column("id")?, column("code")?, column("label")?);

    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let lineno = record.position().map_or(0, |p| p.line() as usize);
        let field = |col: usize| {
            record.get(col).ok_or_else(|| Error::MalformedRecord {
                line: lineno,
                message: format!("expected at least {} fields", col + 1),
            })
        };
        let id = field(id_col)?.to_string();
        if id.is_empty() {
            return Err(Error::MalformedRecord {
                line: lineno,
                message: "empty `id`".into(),
            });
        }
        let code = field(code_col)?.to_string();
        let raw_label = field(label_col)?.trim();
        let label = if raw_label.is_empty() {
            None
        } else {
            let raw: i64 = raw_label.parse().map_err(|_| Error::MalformedRecord {
                line: lineno,
                message: format!("`label` must be an integer, got `{raw_label}`"),
            })?;
            Some(check_label(raw, lineno)?)
        };
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        samples.push(CodeSample { id, code, label });
    }
    Ok(samples)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::MalformedRecord {
            line,
            message: format!("{kind:?}"),
        },
    }
}

fn check_label(raw: i64, line: usize) -> Result<usize> {
    if (0..NUM_CLASSES as i64).contains(&raw) {
        Ok(raw as usize)
    } else {
        Err(Error::LabelOutOfRange { line, label: raw })
    }
}

/// Drops null entries: empty or whitespace-only code, or a missing label.
pub fn clean(corpus: &Corpus) -> Corpus {
    let kept = corpus.samples.iter().filter(|s| !s.is_null_entry()).cloned().collect();
    corpus.derived(kept, "clean")
}

/// Train / validation / test partition of a corpus.
#[derive(Debug, Clone)]
pub struct SplitSet {
    pub train: Corpus,
    pub validation: Corpus,
    pub test: Corpus,
    pub seed: u64,
    pub ratios: [f64; 3],
}

/// JSON manifest naming the members of each split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratios: [f64; 3],
    pub members: SplitMembers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMembers {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl SplitSet {
    pub fn manifest(&self) -> SplitManifest {
        let ids = |c: &Corpus| c.iter().map(|s| s.id.clone()).collect();
        SplitManifest {
            seed: self.seed,
            ratios: self.ratios,
            members: SplitMembers {
                train: ids(&self.train),
                validation: ids(&self.validation),
                test: ids(&self.test),
            },
        }
    }
}

pub const DEFAULT_RATIOS: [f64; 3] = [0.8, 0.1, 0.1];

pub fn validate_ratios(ratios: &[f64; 3]) -> Result<()> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !r.is_finite() || *r <= 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidRatios(ratios.to_vec()));
    }
    Ok(())
}

/// Per-member sizes for `n` items by largest remainder: each size is within 1
/// of `ratio * n`, fractional ties go to the earlier member.
pub(crate) fn allocate(n: usize, ratios: &[f64]) -> Vec<usize> {
    // tolerance absorbs products like 0.8 * 11420 landing just below an integer
    const EPS: f64 = 1e-9;
    let ideal: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes: Vec<usize> = ideal.iter().map(|x| (x + EPS).floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    let frac = |i: usize| ideal[i] - sizes[i] as f64;
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Splits each class independently into train / validation / test.
///
/// Within a class, members are sorted by id and shuffled with the stream
/// `SplitMix64::derive(seed, SPLIT_STREAM + class)`; the first share goes to
/// train, the next to validation, the rest to test. Each member corpus is
/// emitted in id order.
pub fn stratified_split(corpus: &Corpus, ratios: [f64; 3], seed: u64) -> Result<SplitSet> {
    validate_ratios(&ratios)?;
    let by_class = group_by_class(corpus)?;
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < ratios.len() {
            return Err(Error::Stratification {
                class,
                count: members.len(),
                needed: ratios.len(),
            });
        }
    }

    let mut parts: [Vec<&CodeSample>; 3] = Default::default();
    for (class, mut members) in by_class.into_iter().enumerate() {
        members.sort_by(|a, b| a.id.cmp(&b.id));
        SplitMix64::derive(seed, SPLIT_STREAM + class as u64).shuffle(&mut members);
        let sizes = allocate(members.len(), &ratios);
        let mut rest = members.as_slice();
        for (part, size) in parts.iter_mut().zip(sizes) {
            let (head, tail) = rest.split_at(size);
            part.extend_from_slice(head);
            rest = tail;
        }
    }

    let [train, validation, test] = parts.map(|mut part| {
        part.sort_by(|a, b| a.id.cmp(&b.id));
        part.into_iter().cloned().collect::<Vec<_>>()
    });
    Ok(SplitSet {
        train: corpus.derived(train, "train"),
        validation: corpus.derived(validation, "validation"),
        test: corpus.derived(test, "test"),
        seed,
        ratios,
    })
}

fn group_by_class(corpus: &Corpus) -> Result<Vec<Vec<&CodeSample>>> {
    let mut by_class: Vec<Vec<&CodeSample>> = vec![Vec::new(); NUM_CLASSES];
    for s in corpus {
        by_class[s.require_label()?].push(s);
    }
    Ok(by_class)
}

/// Keeps at most `caps[c]` samples of each class `c`.
///
/// Survivors are drawn uniformly without replacement: class members are sorted
/// by id, shuffled with `SplitMix64::derive(seed, DOWNSAMPLE_STREAM + class)`
/// and the first `cap` are kept. Survivors keep their relative input order.
pub fn downsample(corpus: &Corpus, caps: &[usize; NUM_CLASSES], seed: u64) -> Result<Corpus> {
    if let Some(class) = caps.iter().position(|&c| c == 0) {
        return Err(Error::Invalid(format!("cap for class {class} must be >= 1")));
    }
    let mut keep: HashSet<&str> = HashSet::with_capacity(corpus.len());
    for (class, mut members) in group_by_class(corpus)?.into_iter().enumerate() {
        if members.len() <= caps[class] {
            keep.extend(members.iter().map(|s| s.id.as_str()));
            continue;
        }
        members.sort_by(|a, b| a.id.cmp(&b.id));
        SplitMix64::derive(seed, DOWNSAMPLE_STREAM + class as u64).shuffle(&mut members);
        keep.extend(members[..caps[class]].iter().map(|s| s.id.as_str()));
    }
    let survivors = corpus
        .samples
        .iter()
        .filter(|s| keep.contains(s.id.as_str()))
        .cloned()
        .collect();
    Ok(corpus.derived(survivors, "downsampled"))
}

/// Writes `train.jsonl`, `validation.jsonl`, `test.jsonl` and
/// `split_manifest.json` under `dir`.
pub fn write_splits(splits: &SplitSet, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (name, corpus) in [
        ("train", &splits.train),
        ("validation", &splits.validation),
        ("test", &splits.test),
    ] {
        let path = dir.join(format!("{name}.jsonl"));
        corpus.write_jsonl(&path)?;
        written.push(path);
    }
    let manifest_path = dir.join("split_manifest.json");
    let mut file = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    serde_json::to_writer_pretty(&mut file, &splits.manifest())?;
    file.write_all(b"\n").map_err(|e| Error::io(&manifest_path, e))?;
    written.push(manifest_path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_with_counts(counts: &[usize]) -> Corpus {
        let mut samples = Vec::new();
        for (class, &n) in counts.iter().enumerate() {
            for i in 0..n {
                samples.push(CodeSample::new(
                    format!("c{class}-{i:05}"),
                    format!("int f{i}() {{ return {class}; }}"),
                    class,
                ));
            }
        }
        Corpus::from_samples("test", samples).unwrap()
    }

    fn write_tmp(contents: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_jsonl_in_file_order() {
        let f = write_tmp(
            "{\"id\":\"a\",\"code\":\"int x;\",\"label\":0}\n\
             {\"id\":\"b\",\"code\":\"int y;\",\"label\":1}\n\
             {\"id\":\"c\",\"code\":\"int z;\",\"label\":4}\n",
            ".jsonl",
        );
        let corpus = load_corpus(f.path(), Format::Jsonl).unwrap();
        assert_eq!(corpus.ids(), vec!["a", "b", "c"]);
        assert_eq!(corpus.distribution().counts, [1, 1, 0, 0, 1]);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let f = write_tmp("", ".jsonl");
        let corpus = load_corpus(f.path(), Format::Jsonl).unwrap();
        assert!(corpus.is_empty());
        assert_eq!(corpus.distribution().counts, [0; 5]);
        assert_eq!(corpus.distribution().total, 0);
    }

    #[test]
    fn label_out_of_range_names_line() {
        let f = write_tmp(
            "{\"id\":\"a\",\"code\":\"x\",\"label\":0}\n{\"id\":\"b\",\"code\":\"y\",\"label\":7}\n",
            ".jsonl",
        );
        match load_corpus(f.path(), Format::Jsonl) {
            Err(Error::LabelOutOfRange { line: 2, label: 7 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_and_duplicate_records() {
        let f = write_tmp("{\"id\":\"a\",\"code\":\"x\",\"label\":0}\nnot json\n", ".jsonl");
        assert!(matches!(
            load_corpus(f.path(), Format::Jsonl),
            Err(Error::MalformedRecord { line: 2, .. })
        ));
        let f = write_tmp("{\"id\":\"a\",\"code\":\"x\"}\n", ".jsonl");
        assert!(matches!(
            load_corpus(f.path(), Format::Jsonl),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
        let f = write_tmp(
            "{\"id\":\"a\",\"code\":\"x\",\"label\":0}\n{\"id\":\"a\",\"code\":\"y\",\"label\":1}\n",
            ".jsonl",
        );
        assert!(matches!(
            load_corpus(f.path(), Format::Jsonl),
            Err(Error::DuplicateId(id)) if id == "a"
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_corpus(Path::new("/nonexistent/corpus.jsonl"), Format::Jsonl),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn loads_csv_with_quoting_and_nulls() {
        let f = write_tmp(
            "id,code,label\n\
             a,\"int x = 0;\nreturn x;\",2\n\
             b,\"printf(\"\"hi, there\"\");\",3\n\
             c,,1\n\
             d,int y;,\n",
            ".csv",
        );
        let corpus = load_corpus(f.path(), Format::Csv).unwrap();
        assert_eq!(corpus.len(), 4);
        assert_eq!(corpus.samples()[0].code, "int x = 0;\nreturn x;");
        assert_eq!(corpus.samples()[1].code, "printf(\"hi, there\");");
        assert_eq!(corpus.samples()[3].label, None);
        assert_eq!(clean(&corpus).ids(), vec!["a", "b"]);

        let f = write_tmp("id,code,label\na,x,0\nb,y,9\n", ".csv");
        assert!(matches!(
            load_corpus(f.path(), Format::Csv),
            Err(Error::LabelOutOfRange { line: 3, label: 9 })
        ));
    }

    #[test]
    fn clean_drops_null_entries() {
        let mut samples: Vec<CodeSample> = (0..5)
            .map(|i| CodeSample::new(format!("s{i}"), "int a;", i % 5))
            .collect();
        samples[1].code = "   \n\t".into();
        samples[3].code = String::new();
        let corpus = Corpus::from_samples("t", samples).unwrap();
        let cleaned = clean(&corpus);
        assert_eq!(cleaned.ids(), vec!["s0", "s2", "s4"]);
        assert_eq!(clean(&cleaned).samples(), cleaned.samples());

        let untouched = corpus_with_counts(&[2, 2]);
        assert_eq!(clean(&untouched).samples(), untouched.samples());

        let all_null = Corpus::from_samples(
            "t",
            vec![CodeSample {
                id: "x".into(),
                code: " ".into(),
                label: Some(0),
            }],
        )
        .unwrap();
        assert!(clean(&all_null).is_empty());
    }

    #[test]
    fn allocate_is_within_one() {
        assert_eq!(allocate(100, &DEFAULT_RATIOS), vec![80, 10, 10]);
        assert_eq!(allocate(3, &DEFAULT_RATIOS), vec![3, 0, 0]);
        assert_eq!(allocate(11420, &DEFAULT_RATIOS), vec![9136, 1142, 1142]);
        for n in 0..300 {
            let sizes = allocate(n, &DEFAULT_RATIOS);
            assert_eq!(sizes.iter().sum::<usize>(), n);
            for (s, r) in sizes.iter().zip(DEFAULT_RATIOS) {
                assert!((*s as f64 - r * n as f64).abs() < 1.0);
            }
        }
    }

    #[test]
    fn single_class_exact_split() {
        let corpus = corpus_with_counts(&[100]);
        for seed in [0, 1, 42, u64::MAX] {
            let split = stratified_split(&corpus, DEFAULT_RATIOS, seed).unwrap();
            assert_eq!(
                (split.train.len(), split.validation.len(), split.test.len()),
                (80, 10, 10)
            );
        }
    }

    #[test]
    fn split_is_deterministic() {
        let corpus = corpus_with_counts(&[30, 20, 10, 10, 10]);
        let a = stratified_split(&corpus, DEFAULT_RATIOS, 9).unwrap();
        let b = stratified_split(&corpus, DEFAULT_RATIOS, 9).unwrap();
        assert_eq!(a.manifest(), b.manifest());
        let c = stratified_split(&corpus, DEFAULT_RATIOS, 10).unwrap();
        assert_ne!(a.manifest().members.train, c.manifest().members.train);
    }

    #[test]
    fn split_errors() {
        let corpus = corpus_with_counts(&[10, 2]);
        assert!(matches!(
            stratified_split(&corpus, DEFAULT_RATIOS, 0),
            Err(Error::Stratification { class: 1, count: 2, .. })
        ));
        let corpus = corpus_with_counts(&[10]);
        assert!(matches!(
            stratified_split(&corpus, [0.8, 0.1, 0.2], 0),
            Err(Error::InvalidRatios(_))
        ));
        assert!(matches!(
            stratified_split(&corpus, [1.0, 0.0, 0.0], 0),
            Err(Error::InvalidRatios(_))
        ));
    }

    #[test]
    fn downsample_caps_each_class() {
        let corpus = corpus_with_counts(&[500, 500, 20, 100, 400]);
        let out = downsample(&corpus, &[100; 5], 3).unwrap();
        assert_eq!(out.distribution().counts, [100, 100, 20, 100, 100]);
        let unchanged = downsample(&corpus, &[1000; 5], 3).unwrap();
        assert_eq!(unchanged.samples(), corpus.samples());
        assert!(downsample(&corpus, &[0, 1, 1, 1, 1], 3).is_err());
    }

    #[test]
    fn downsample_preserves_order_and_seed() {
        let corpus = corpus_with_counts(&[50, 50]);
        let a = downsample(&corpus, &[10; 5], 5).unwrap();
        let b = downsample(&corpus, &[10; 5], 5).unwrap();
        assert_eq!(a.samples(), b.samples());
        let positions: Vec<usize> = a
            .iter()
            .map(|s| corpus.iter().position(|t| t.id == s.id).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn split_ignores_input_order() {
        let corpus = corpus_with_counts(&[20, 15, 9]);
        let mut reversed: Vec<CodeSample> = corpus.samples().to_vec();
        reversed.reverse();
        let reversed = Corpus::from_samples("r", reversed).unwrap();
        let a = stratified_split(&corpus, DEFAULT_RATIOS, 77).unwrap();
        let b = stratified_split(&reversed, DEFAULT_RATIOS, 77).unwrap();
        assert_eq!(a.manifest(), b.manifest());
    }
}
