//! Stacked ensembles of probabilistic classifiers for five-class CWE
//! vulnerability detection.
//!
//! Base models map a code snippet to a distribution over the classes; a
//! meta-classifier learns to combine their concatenated outputs. See the
//! `examples/` directory for one runnable program per capability.

pub mod base_models;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod meta;
pub mod metrics;
pub mod render;
pub mod rng;
pub mod stacking;
pub mod synthetic;

pub use error::{Error, Result};
