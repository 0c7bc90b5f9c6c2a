//! Random forest of Gini-impurity classification trees.
//!
//! Tree `t` draws from its own stream `SplitMix64::derive(seed, t)`: first `n`
//! bootstrap indices, then one feature permutation per node in depth-first
//! (left before right) order. A node examines features in permutation order
//! until `ceil(sqrt(d))` non-constant ones have been scanned, continuing past
//! constant features. Trees are built in parallel; the result does not depend
//! on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{midpoint, sorted_by_feature, Node, Tree};
use crate::corpus::NUM_CLASSES;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_estimators: 200,
            max_depth: 10,
            min_samples_split: 2,
            bootstrap: true,
            seed: 42,
        }
    }
}

/// Leaf payload: bootstrap-weighted class counts.
pub type ClassCounts = [u32; NUM_CLASSES];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: RfParams,
    pub max_features: usize,
    pub trees: Vec<Tree<ClassCounts>>,
}

impl ForestModel {
    /// Mean over trees of the leaf class fractions.
    pub fn predict_proba_row(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        let mut p = [0.0; NUM_CLASSES];
        for tree in &self.trees {
            let counts = tree.leaf(x);
            let total: u32 = counts.iter().sum();
            for (pc, &c) in p.iter_mut().zip(counts) {
                *pc += f64::from(c) / f64::from(total);
            }
        }
        let n = self.trees.len() as f64;
        p.map(|v| v / n)
    }
}

pub fn max_features(d: usize) -> usize {
    ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1))
}

pub(crate) fn fit(data: &[Vec<f64>], labels: &[usize], params: &RfParams) -> ForestModel {
    let d = data[0].len();
    let k = max_features(d);
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = SplitMix64::derive(params.seed, t as u64);
            let mut weights = vec![0u32; data.len()];
            if params.bootstrap {
                for _ in 0..data.len() {
                    weights[rng.below(data.len())] += 1;
                }
            } else {
                weights.fill(1);
            }
            let rows: Vec<usize> = (0..data.len()).filter(|&i| weights[i] > 0).collect();
            let mut builder = Builder {
                data,
                labels,
                weights: &weights,
                params,
                max_features: k,
                rng,
                nodes: Vec::new(),
            };
            builder.grow(rows, 0);
            Tree { nodes: builder.nodes }
        })
        .collect();
    ForestModel {
        params: *params,
        max_features: k,
        trees,
    }
}

struct Builder<'a> {
    data: &'a [Vec<f64>],
    labels: &'a [usize],
    weights: &'a [u32],
    params: &'a RfParams,
    max_features: usize,
    rng: SplitMix64,
    nodes: Vec<Node<ClassCounts>>,
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini_weighted(counts: &[u64; NUM_CLASSES]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let sum_sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    // total * gini = total - sum(c^2) / total
    t - sum_sq / t
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> [u64; NUM_CLASSES] {
        let mut counts = [0u64; NUM_CLASSES];
        for &i in rows {
            counts[self.labels[i]] += u64::from(self.weights[i]);
        }
        counts
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.counts(&rows);
        let leaf = counts.map(|c| c as u32);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || rows.len() < self.params.min_samples_split {
            self.nodes.push(Node::Leaf(leaf));
            return id;
        }
        let Some(split) = self.best_split(&rows, &counts) else {
            self.nodes.push(Node::Leaf(leaf));
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.data[i][split.feature] <= split.threshold);
        self.nodes.push(Node::Leaf(leaf));
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize], total: &[u64; NUM_CLASSES]) -> Option<Split> {
        let d = self.data[0].len();
        let mut features: Vec<usize> = (0..d).collect();
        self.rng.shuffle(&mut features);

        let mut best: Option<Split> = None;
        let mut scanned = 0;
        for feature in features {
            if scanned >= self.max_features {
                break;
            }
            let sorted = sorted_by_feature(self.data, rows, feature);
            let first = self.data[sorted[0]][feature];
            let last = self.data[sorted[sorted.len() - 1]][feature];
            if first == last {
                continue;
            }
            scanned += 1;

            let mut left = [0u64; NUM_CLASSES];
            for w in sorted.windows(2) {
                let (i, j) = (w[0], w[1]);
                left[self.labels[i]] += u64::from(self.weights[i]);
                let (lo, hi) = (self.data[i][feature], self.data[j][feature]);
                if lo == hi {
                    continue;
                }
                let mut right = *total;
                for (r, l) in right.iter_mut().zip(&left) {
                    *r -= l;
                }
                let impurity = gini_weighted(&left) + gini_weighted(&right);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(Split {
                        feature,
                        threshold: midpoint(lo, hi),
                        impurity,
                    });
                }
            }
        }
        best
    }
}
