//! Multinomial logistic (softmax) regression over hashed sparse features,
//! trained by full-batch gradient descent on mean cross-entropy plus an L2
//! penalty on the weights (biases are not penalized).
//!
//! Each epoch takes one gradient step. If the step would raise the objective,
//! the learning rate is halved until it does not, and the smaller rate is
//! kept for later epochs; so the recorded objective never increases.

use serde::{Deserialize, Serialize};

use super::features::{check_dim, FeatureVector};
use crate::corpus::NUM_CLASSES;
use crate::error::{Error, Result};

const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoftmaxConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for SoftmaxConfig {
    fn default() -> Self {
        Self {
            dim: 1 << 14,
            epochs: 200,
            learning_rate: 0.5,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxModel {
    pub dim: usize,
    /// Feature-major: weight of feature `j` for class `c` is `weights[j * NUM_CLASSES + c]`.
    pub weights: Vec<f64>,
    pub bias: [f64; NUM_CLASSES],
    /// Training objective before the first epoch and after each epoch.
    pub objective_history: Vec<f64>,
    /// Learning rate in effect when training stopped.
    pub final_learning_rate: f64,
}

impl SoftmaxModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            weights: vec![0.0; dim * NUM_CLASSES],
            bias: [0.0; NUM_CLASSES],
            objective_history: Vec::new(),
            final_learning_rate: 0.0,
        }
    }

    pub fn logits(&self, x: &FeatureVector) -> [f64; NUM_CLASSES] {
        logits(&self.weights, &self.bias, x)
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> Result<[f64; NUM_CLASSES]> {
        if x.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim,
            });
        }
        Ok(softmax(self.logits(x)))
    }
}

fn logits(weights: &[f64], bias: &[f64; NUM_CLASSES], x: &FeatureVector) -> [f64; NUM_CLASSES] {
    let mut z = *bias;
    for &(j, v) in &x.entries {
        let row = &weights[j * NUM_CLASSES..(j + 1) * NUM_CLASSES];
        for (zc, w) in z.iter_mut().zip(row) {
            *zc += w * v;
        }
    }
    z
}

pub(crate) fn softmax(z: [f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = z.map(|v| (v - max).exp());
    let sum: f64 = p.iter().sum();
    for v in &mut p {
        *v /= sum;
    }
    p
}

fn log_sum_exp(z: &[f64; NUM_CLASSES]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

struct Problem<'a> {
    xs: &'a [FeatureVector],
    ys: &'a [usize],
    l2: f64,
}

impl Problem<'_> {
    fn objective(&self, weights: &[f64], bias: &[f64; NUM_CLASSES]) -> f64 {
        let n = self.xs.len() as f64;
        let ce: f64 = self
            .xs
            .iter()
            .zip(self.ys)
            .map(|(x, &y)| {
                let z = logits(weights, bias, x);
                log_sum_exp(&z) - z[y]
            })
            .sum();
        let penalty: f64 = weights.iter().map(|w| w * w).sum();
        ce / n + 0.5 * self.l2 * penalty
    }

    fn gradient(&self, weights: &[f64], bias: &[f64; NUM_CLASSES]) -> (Vec<f64>, [f64; NUM_CLASSES]) {
        let n = self.xs.len() as f64;
        let mut gw: Vec<f64> = weights.iter().map(|w| self.l2 * w).collect();
        let mut gb = [0.0; NUM_CLASSES];
        for (x, &y) in self.xs.iter().zip(self.ys) {
            let mut residual = softmax(logits(weights, bias, x));
            residual[y] -= 1.0;
            for (g, r) in gb.iter_mut().zip(&residual) {
                *g += r / n;
            }
            for &(j, v) in &x.entries {
                let row = &mut gw[j * NUM_CLASSES..(j + 1) * NUM_CLASSES];
                for (g, r) in row.iter_mut().zip(&residual) {
                    *g += r * v / n;
                }
            }
        }
        (gw, gb)
    }
}

/// Fits a softmax model on featurized samples, starting from zero weights.
pub fn train(xs: &[FeatureVector], ys: &[usize], config: &SoftmaxConfig) -> Result<SoftmaxModel> {
    check_dim(config.dim)?;
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if let Some(x) = xs.iter().find(|x| x.dim != config.dim) {
        return Err(Error::DimensionMismatch {
            expected: config.dim,
            got: x.dim,
        });
    }
    let mut present = [false; NUM_CLASSES];
    for &y in ys {
        if y >= NUM_CLASSES {
            return Err(Error::Invalid(format!("label {y} out of range")));
        }
        present[y] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::DegenerateTraining(
            "training data needs at least two distinct labels".into(),
        ));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::Invalid("learning rate must be positive".into()));
    }

    let problem = Problem { xs, ys, l2: config.l2 };
    let mut model = SoftmaxModel::zeros(config.dim);
    let mut objective = problem.objective(&model.weights, &model.bias);
    model.objective_history.push(objective);
    let mut lr = config.learning_rate;

    'epochs: for _ in 0..config.epochs {
        let (gw, gb) = problem.gradient(&model.weights, &model.bias);
        let mut halvings = 0;
        loop {
            let weights: Vec<f64> = model.weights.iter().zip(&gw).map(|(w, g)| w - lr * g).collect();
            let mut bias = model.bias;
            for (b, g) in bias.iter_mut().zip(&gb) {
                *b -= lr * g;
            }
            let trial = problem.objective(&weights, &bias);
            if trial <= objective {
                model.weights = weights;
                model.bias = bias;
                objective = trial;
                break;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                // no descent left at machine precision
                break 'epochs;
            }
            lr *= 0.5;
        }
        model.objective_history.push(objective);
    }
    model.final_learning_rate = lr;
    Ok(model)
}
