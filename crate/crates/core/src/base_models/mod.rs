//! Base models: anything that maps a code sample to a 5-class probability
//! vector.
//!
//! Two desk-scale learners are built in, both softmax regressions that differ
//! only in the view of the code they see (hashed token n-grams vs hashed
//! character n-grams). The third kind serves probabilities computed elsewhere
//! from a [`ProbTable`].

pub mod external;
pub mod features;
pub mod lexer;
pub mod softmax;

use serde::{Deserialize, Serialize};

pub use external::{load_external_probs, ProbTable};
pub use features::{featurize, featurize_chars, fnv1a64, normalize_chars, FeatureVector};
pub use lexer::{tokenize, Token, TokenKind};
pub use softmax::{SoftmaxConfig, SoftmaxModel};

use crate::corpus::{CodeSample, Corpus, NUM_CLASSES};
use crate::error::{Error, Result};

/// Tolerance on the unit sum of a [`ProbVector`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// A probability distribution over the five classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; NUM_CLASSES]", into = "[f64; NUM_CLASSES]")]
pub struct ProbVector([f64; NUM_CLASSES]);

impl ProbVector {
    pub fn new(p: [f64; NUM_CLASSES]) -> Result<Self> {
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Invalid(format!("invalid probability vector {p:?}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Invalid(format!("probabilities {p:?} sum to {sum}")));
        }
        Ok(Self(p))
    }

    /// Divides by the sum. Entries must be finite, non-negative, not all zero.
    pub fn normalized(p: [f64; NUM_CLASSES]) -> Self {
        let sum: f64 = p.iter().sum();
        debug_assert!(sum > 0.0 && sum.is_finite());
        Self(p.map(|v| v / sum))
    }

    pub(crate) fn from_array_unchecked(p: [f64; NUM_CLASSES]) -> Self {
        Self(p)
    }

    pub fn uniform() -> Self {
        Self([1.0 / NUM_CLASSES as f64; NUM_CLASSES])
    }

    pub fn as_slice(&self) -> &[f64; NUM_CLASSES] {
        &self.0
    }

    /// Index of the largest entry; ties go to the smallest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

impl TryFrom<[f64; NUM_CLASSES]> for ProbVector {
    type Error = Error;

    fn try_from(p: [f64; NUM_CLASSES]) -> Result<Self> {
        Self::new(p)
    }
}

impl From<ProbVector> for [f64; NUM_CLASSES] {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

/// Index of the largest value, first index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinKind {
    /// Token unigrams and bigrams.
    HashedTokenSoftmax,
    /// Character 3- to 5-grams.
    CharNgramSoftmax,
}

impl BuiltinKind {
    pub fn featurize(self, code: &str, dim: usize) -> Result<FeatureVector> {
        match self {
            BuiltinKind::HashedTokenSoftmax => featurize(&tokenize(code), dim),
            BuiltinKind::CharNgramSoftmax => featurize_chars(code, dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Scorer {
    Builtin(BuiltinKind, SoftmaxModel),
    External(ProbTable),
}

/// A named base model.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseModel {
    name: String,
    scorer: Scorer,
}

impl BaseModel {
    /// A built-in model with all-zero parameters.
    pub fn untrained(name: impl Into<String>, kind: BuiltinKind, dim: usize) -> Result<Self> {
        features::check_dim(dim)?;
        Ok(Self {
            name: name.into(),
            scorer: Scorer::Builtin(kind, SoftmaxModel::zeros(dim)),
        })
    }

    pub fn external(name: impl Into<String>, table: ProbTable) -> Self {
        Self {
            name: name.into(),
            scorer: Scorer::External(table),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.scorer {
            Scorer::Builtin(BuiltinKind::HashedTokenSoftmax, _) => "hashed-token-softmax",
            Scorer::Builtin(BuiltinKind::CharNgramSoftmax, _) => "char-ngram-softmax",
            Scorer::External(_) => "external",
        }
    }

    /// Parameters of a built-in model.
    pub fn softmax(&self) -> Option<&SoftmaxModel> {
        match &self.scorer {
            Scorer::Builtin(_, m) => Some(m),
            Scorer::External(_) => None,
        }
    }

    pub fn table(&self) -> Option<&ProbTable> {
        match &self.scorer {
            Scorer::External(t) => Some(t),
            Scorer::Builtin(..) => None,
        }
    }

    /// The model's class distribution for `sample`.
    pub fn predict_proba_base(&self, sample: &CodeSample) -> Result<ProbVector> {
        match &self.scorer {
            Scorer::Builtin(kind, model) => {
                let x = kind.featurize(&sample.code, model.dim)?;
                Ok(ProbVector::from_array_unchecked(model.predict_proba(&x)?))
            }
            Scorer::External(table) => table
                .get(&sample.id)
                .copied()
                .ok_or_else(|| Error::MissingProbabilities {
                    model: self.name.clone(),
                    ids: vec![sample.id.clone()],
                }),
        }
    }

    /// Ids in `corpus` this model cannot score.
    pub fn missing_ids(&self, corpus: &Corpus) -> Vec<String> {
        match &self.scorer {
            Scorer::Builtin(..) => Vec::new(),
            Scorer::External(table) => corpus
                .iter()
                .filter(|s| table.get(&s.id).is_none())
                .map(|s| s.id.clone())
                .collect(),
        }
    }
}

/// Trains a built-in base model on a labeled corpus.
pub fn train_builtin(
    name: impl Into<String>,
    kind: BuiltinKind,
    train: &Corpus,
    config: &SoftmaxConfig,
) -> Result<BaseModel> {
    features::check_dim(config.dim)?;
    let labels = train.labels()?;
    let xs = train
        .iter()
        .map(|s| kind.featurize(&s.code, config.dim))
        .collect::<Result<Vec<_>>>()?;
    let model = softmax::train(&xs, &labels, config)?;
    Ok(BaseModel {
        name: name.into(),
        scorer: Scorer::Builtin(kind, model),
    })
}
