//! Multiclass gradient-boosted regression trees on the softmax log-loss.
//!
//! Scores start at the log class priors of the training labels. Each round
//! fits one tree per present class to the gradient `g = p - y` and hessian
//! `h = 2p(1 - p)` of the current probabilities. Leaves take the Newton weight
//! `-G / (H + lambda)` scaled by the learning rate; a split is kept when its
//! gain
//!
//! ```text
//! 0.5 * (GL^2 / (HL + lambda) + GR^2 / (HR + lambda) - G^2 / (H + lambda))
//! ```
//!
//! exceeds `min_split_gain` and both children carry hessian at least
//! `min_child_weight`. Classes absent from training keep probability 0.

use serde::{Deserialize, Serialize};

use super::tree::{midpoint, sorted_by_feature, Node, Tree};
use crate::corpus::NUM_CLASSES;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub min_child_weight: f64,
    pub min_split_gain: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 6,
            lambda: 1.0,
            min_child_weight: 1.0,
            min_split_gain: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub params: GbtParams,
    pub present: [bool; NUM_CLASSES],
    /// Initial score per class; unused for absent classes.
    pub base_score: [f64; NUM_CLASSES],
    /// `rounds[r][k]` is the tree for the `k`-th present class in round `r`.
    pub rounds: Vec<Vec<Tree<f64>>>,
    /// Mean training log-loss before any tree, then after each round.
    pub loss_history: Vec<f64>,
}

impl BoostedModel {
    pub fn scores_row(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        let mut s = self.base_score;
        let classes = present_classes(&self.present);
        for round in &self.rounds {
            for (tree, &c) in round.iter().zip(&classes) {
                s[c] += tree.leaf(x);
            }
        }
        s
    }

    pub fn predict_proba_row(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        softmax_present(&self.scores_row(x), &self.present)
    }
}

fn present_classes(present: &[bool; NUM_CLASSES]) -> Vec<usize> {
    (0..NUM_CLASSES).filter(|&c| present[c]).collect()
}

fn softmax_present(s: &[f64; NUM_CLASSES], present: &[bool; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = (0..NUM_CLASSES)
        .filter(|&c| present[c])
        .map(|c| s[c])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; NUM_CLASSES];
    for c in (0..NUM_CLASSES).filter(|&c| present[c]) {
        p[c] = (s[c] - max).exp();
    }
    let sum: f64 = p.iter().sum();
    p.map(|v| v / sum)
}

fn mean_log_loss(scores: &[[f64; NUM_CLASSES]], labels: &[usize], present: &[bool; NUM_CLASSES]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(s, &y)| {
            let max = (0..NUM_CLASSES)
                .filter(|&c| present[c])
                .map(|c| s[c])
                .fold(f64::NEG_INFINITY, f64::max);
            let lse = max
                + (0..NUM_CLASSES)
                    .filter(|&c| present[c])
                    .map(|c| (s[c] - max).exp())
                    .sum::<f64>()
                    .ln();
            lse - s[y]
        })
        .sum();
    total / labels.len() as f64
}

pub(crate) fn fit(
    data: &[Vec<f64>],
    labels: &[usize],
    present: &[bool; NUM_CLASSES],
    params: &GbtParams,
) -> BoostedModel {
    let n = labels.len();
    let mut counts = [0usize; NUM_CLASSES];
    for &l in labels {
        counts[l] += 1;
    }
    let mut base_score = [0.0; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        if present[c] {
            base_score[c] = (counts[c] as f64 / n as f64).ln();
        }
    }
    let classes = present_classes(present);
    let mut scores = vec![base_score; n];
    let mut loss_history = vec![mean_log_loss(&scores, labels, present)];
    let mut rounds = Vec::with_capacity(params.n_rounds);
    let all_rows: Vec<usize> = (0..n).collect();

    for _ in 0..params.n_rounds {
        let probs: Vec<[f64; NUM_CLASSES]> = scores.iter().map(|s| softmax_present(s, present)).collect();
        let mut round = Vec::with_capacity(classes.len());
        for &c in &classes {
            let grad: Vec<f64> = (0..n)
                .map(|i| probs[i][c] - if labels[i] == c { 1.0 } else { 0.0 })
                .collect();
            let hess: Vec<f64> = (0..n)
                .map(|i| (2.0 * probs[i][c] * (1.0 - probs[i][c])).max(1e-16))
                .collect();
            let mut builder = Builder {
                data,
                grad: &grad,
                hess: &hess,
                params,
                nodes: Vec::new(),
            };
            builder.grow(all_rows.clone(), 0);
            round.push(Tree { nodes: builder.nodes });
        }
        for (i, s) in scores.iter_mut().enumerate() {
            for (tree, &c) in round.iter().zip(&classes) {
                s[c] += tree.leaf(&data[i]);
            }
        }
        loss_history.push(mean_log_loss(&scores, labels, present));
        rounds.push(round);
    }
    BoostedModel {
        params: *params,
        present: *present,
        base_score,
        rounds,
        loss_history,
    }
}

struct Builder<'a> {
    data: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbtParams,
    nodes: Vec<Node<f64>>,
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        let weight = -g / (h + self.params.lambda) * self.params.learning_rate;
        self.nodes.push(Node::Leaf(weight));
        if depth >= self.params.max_depth || rows.len() < 2 {
            return id;
        }
        let Some(split) = self.best_split(&rows, g, h) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.data[i][split.feature] <= split.threshold);
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

    fn best_split(&self, rows: &[usize], g: f64, h: f64) -> Option<Split> {
        let parent = self.score(g, h);
        let mut best: Option<Split> = None;
        for feature in 0..self.data[0].len() {
            let sorted = sorted_by_feature(self.data, rows, feature);
            let (mut gl, mut hl) = (0.0, 0.0);
            for w in sorted.windows(2) {
                let (i, j) = (w[0], w[1]);
                gl += self.grad[i];
                hl += self.hess[i];
                let (lo, hi) = (self.data[i][feature], self.data[j][feature]);
                if lo == hi {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < self.params.min_child_weight || hr < self.params.min_child_weight {
                    continue;
                }
                let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent);
                if gain > self.params.min_split_gain && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Split {
                        feature,
                        threshold: midpoint(lo, hi),
                        gain,
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn noisy(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = SplitMix64::new(seed);
        let data: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.next_f64()).collect()).collect();
        let labels = data
            .iter()
            .map(|x| {
                if rng.next_f64() < 0.2 {
                    rng.below(5)
                } else {
                    (x[0] * 5.0) as usize
                }
            })
            .collect();
        (data, labels)
    }

    #[test]
    fn zero_rounds_predict_priors() {
        let data = vec![vec![0.0]; 4];
        let labels = vec![0, 0, 0, 2];
        let mut present = [false; NUM_CLASSES];
        present[0] = true;
        present[2] = true;
        let params = GbtParams {
            n_rounds: 0,
            ..Default::default()
        };
        let m = fit(&data, &labels, &present, &params);
        let p = m.predict_proba_row(&[0.0]);
        assert!((p[0] - 0.75).abs() < 1e-15 && (p[2] - 0.25).abs() < 1e-15);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn loss_decreases_and_depth_is_bounded() {
        let (data, labels) = noisy(300, 9);
        let m = fit(
            &data,
            &labels,
            &[true; NUM_CLASSES],
            &GbtParams {
                n_rounds: 30,
                ..Default::default()
            },
        );
        assert_eq!(m.loss_history.len(), 31);
        assert!(m.loss_history.windows(2).all(|w| w[1] <= w[0] + 1e-7));
        assert!(m.loss_history[30] < m.loss_history[0] * 0.8);
        assert!(m.rounds.iter().flatten().all(|t| t.depth() <= 6));
    }

    #[test]
    fn gain_threshold_blocks_useless_splits() {
        // one class everywhere: every gradient has the same sign and there is
        // nothing to separate
        let data: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels = vec![1; 20];
        let mut present = [false; NUM_CLASSES];
        present[1] = true;
        let m = fit(
            &data,
            &labels,
            &present,
            &GbtParams {
                n_rounds: 3,
                ..Default::default()
            },
        );
        assert!(m.rounds.iter().flatten().all(|t| t.nodes.len() == 1));
        assert_eq!(m.predict_proba_row(&[3.0])[1], 1.0);
    }
}
