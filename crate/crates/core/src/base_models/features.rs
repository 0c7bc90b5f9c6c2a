//! Hashed sparse features.
//!
//! Bucket of a key = `fnv1a64(key bytes) & (dim - 1)`, where `fnv1a64` is
//! 64-bit FNV-1a (offset basis `0xcbf29ce484222325`, prime `0x100000001b3`).
//!
//! Token view: every lexeme is a unigram key; each adjacent pair `a, b` is a
//! bigram key with bytes `a ++ [0x00] ++ b`. Character view: the raw text
//! (comments included) with ASCII digits folded to `0` and whitespace runs
//! collapsed to one space; every window of 3, 4 and 5 characters is a key.
//! In both views, bucket values are raw counts scaled by `1 / sqrt(units)`,
//! where units is the number of tokens (token view) or windows (char view).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::lexer::Token;
use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub const MIN_DIM: usize = 1 << 10;
pub const CHAR_NGRAM_SIZES: std::ops::RangeInclusive<usize> = 3..=5;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Sparse vector with unique, ascending indices below `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum()
    }
}

pub fn check_dim(dim: usize) -> Result<()> {
    if dim < MIN_DIM || !dim.is_power_of_two() {
        return Err(Error::Invalid(format!(
            "feature dimension {dim} must be a power of two >= {MIN_DIM}"
        )));
    }
    Ok(())
}

struct Hasher {
    mask: u64,
    counts: BTreeMap<usize, f64>,
    units: usize,
}

impl Hasher {
    fn new(dim: usize) -> Self {
        Self {
            mask: dim as u64 - 1,
            counts: BTreeMap::new(),
            units: 0,
        }
    }

    fn add(&mut self, key: &[u8]) {
        let bucket = (fnv1a64(key) & self.mask) as usize;
        *self.counts.entry(bucket).or_insert(0.0) += 1.0;
    }

    fn finish(self) -> FeatureVector {
        let dim = self.mask as usize + 1;
        if self.units == 0 {
            return FeatureVector {
                dim,
                entries: Vec::new(),
            };
        }
        let scale = 1.0 / (self.units as f64).sqrt();
        FeatureVector {
            dim,
            entries: self.counts.into_iter().map(|(i, c)| (i, c * scale)).collect(),
        }
    }
}

/// Token unigrams and bigrams hashed into `dim` buckets.
pub fn featurize(tokens: &[Token], dim: usize) -> Result<FeatureVector> {
    check_dim(dim)?;
    let mut hasher = Hasher::new(dim);
    hasher.units = tokens.len();
    let mut key = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        hasher.add(tok.text.as_bytes());
        if let Some(next) = tokens.get(i + 1) {
            key.clear();
            key.extend_from_slice(tok.text.as_bytes());
            key.push(0);
            key.extend_from_slice(next.text.as_bytes());
            hasher.add(&key);
        }
    }
    Ok(hasher.finish())
}

/// Text as seen by the character view: digits folded, whitespace collapsed.
pub fn normalize_chars(code: &str) -> Vec<char> {
    let mut out = Vec::with_capacity(code.len());
    let mut pending_space = false;
    for c in code.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(if c.is_ascii_digit() { '0' } else { c });
    }
    out
}

/// Character 3-, 4- and 5-grams hashed into `dim` buckets.
pub fn featurize_chars(code: &str, dim: usize) -> Result<FeatureVector> {
    check_dim(dim)?;
    let chars = normalize_chars(code);
    let mut hasher = Hasher::new(dim);
    let mut key = String::new();
    for n in CHAR_NGRAM_SIZES {
        for window in chars.windows(n) {
            key.clear();
            key.extend(window);
            hasher.add(key.as_bytes());
            hasher.units += 1;
        }
    }
    Ok(hasher.finish())
}
