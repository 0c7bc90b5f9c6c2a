//! One-vs-rest L2-regularized logistic regression.
//!
//! For each class present in training, solves
//!
//! ```text
//! min_w  0.5 * |w|^2 + C * sum_i log(1 + exp(-y_i * w.x_i))
//! ```
//!
//! with `y_i = +1` for the class and `-1` otherwise, and `x_i` augmented by a
//! constant 1 so the intercept is regularized along with the weights. The
//! solver is Newton's method with Armijo backtracking, stopping when the
//! gradient norm drops below `tol` or after `max_iter` iterations.
//! Class probabilities are the per-class sigmoids normalized to sum to one.

use serde::{Deserialize, Serialize};

use crate::corpus::NUM_CLASSES;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrParams {
    pub c: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LrParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_iter: 200,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryLogistic {
    pub class: usize,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// True when the solver stopped at `max_iter` before reaching `tol`.
    pub hit_iteration_cap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub params: LrParams,
    pub per_class: Vec<BinaryLogistic>,
}

impl LogisticModel {
    /// All-zero weights for every class: predicts uniform probabilities.
    pub fn zeros(n_features: usize) -> Self {
        Self {
            params: LrParams::default(),
            per_class: (0..NUM_CLASSES)
                .map(|class| BinaryLogistic {
                    class,
                    weights: vec![0.0; n_features],
                    intercept: 0.0,
                    iterations: 0,
                    gradient_norm: 0.0,
                    hit_iteration_cap: false,
                })
                .collect(),
        }
    }

    pub fn predict_proba_row(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        let mut p = [0.0; NUM_CLASSES];
        for m in &self.per_class {
            p[m.class] = sigmoid(dot(&m.weights, x) + m.intercept);
        }
        let sum: f64 = p.iter().sum();
        p.map(|v| v / sum)
    }
}

pub(crate) fn fit(
    data: &[Vec<f64>],
    labels: &[usize],
    present: &[bool; NUM_CLASSES],
    params: &LrParams,
) -> LogisticModel {
    let augmented: Vec<Vec<f64>> = data
        .iter()
        .map(|row| row.iter().copied().chain(std::iter::once(1.0)).collect())
        .collect();
    let per_class = (0..NUM_CLASSES)
        .filter(|&c| present[c])
        .map(|class| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            let sol = newton(&augmented, &y, params);
            let (intercept, weights) = sol.w.split_last().map(|(b, w)| (*b, w.to_vec())).unwrap();
            BinaryLogistic {
                class,
                weights,
                intercept,
                iterations: sol.iterations,
                gradient_norm: sol.gradient_norm,
                hit_iteration_cap: sol.hit_cap,
            }
        })
        .collect();
    LogisticModel {
        params: *params,
        per_class,
    }
}

pub(crate) struct Solution {
    pub w: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub hit_cap: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// log(1 + exp(-m)) without overflow
fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

pub(crate) fn objective(x: &[Vec<f64>], y: &[f64], w: &[f64], c: f64) -> f64 {
    let loss: f64 = x.iter().zip(y).map(|(xi, yi)| log1p_exp_neg(yi * dot(w, xi))).sum();
    0.5 * dot(w, w) + c * loss
}

pub(crate) fn gradient(x: &[Vec<f64>], y: &[f64], w: &[f64], c: f64) -> Vec<f64> {
    let mut g = w.to_vec();
    for (xi, &yi) in x.iter().zip(y) {
        // d/dm log(1 + exp(-m)) = -sigmoid(-m)
        let coef = -c * yi * sigmoid(-yi * dot(w, xi));
        for (gj, xij) in g.iter_mut().zip(xi) {
            *gj += coef * xij;
        }
    }
    g
}

#[allow(clippy::needless_range_loop)]
fn newton(x: &[Vec<f64>], y: &[f64], params: &LrParams) -> Solution {
    let d = x[0].len();
    let c = params.c;
    let mut w = vec![0.0; d];
    let mut f = objective(x, y, &w, c);
    let mut g = gradient(x, y, &w, c);
    let mut gnorm = dot(&g, &g).sqrt();
    let mut iterations = 0;

    while gnorm >= params.tol && iterations < params.max_iter {
        iterations += 1;
        let mut hessian = vec![vec![0.0; d]; d];
        for (i, row) in hessian.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for xi in x {
            let s = sigmoid(dot(&w, xi));
            let weight = c * s * (1.0 - s);
            if weight == 0.0 {
                continue;
            }
            for a in 0..d {
                let wa = weight * xi[a];
                for b in 0..=a {
                    hessian[a][b] += wa * xi[b];
                }
            }
        }
        for a in 0..d {
            for b in a + 1..d {
                hessian[a][b] = hessian[b][a];
            }
        }
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let step = cholesky_solve(hessian, neg_g);
        let slope = dot(&g, &step);

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = w.iter().zip(&step).map(|(wi, si)| wi + t * si).collect();
            let f_trial = objective(x, y, &trial, c);
            if f_trial <= f + 1e-4 * t * slope {
                w = trial;
                f = f_trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        g = gradient(x, y, &w, c);
        gnorm = dot(&g, &g).sqrt();
        if !accepted {
            // objective flat to machine precision along the Newton direction
            break;
        }
    }
    Solution {
        w,
        iterations,
        gradient_norm: gnorm,
        hit_cap: gnorm >= params.tol && iterations >= params.max_iter,
    }
}

/// Solves `a * x = b` for symmetric positive definite `a`.
#[allow(clippy::needless_range_loop)]
fn cholesky_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for j in 0..n {
        let mut diag = a[j][j];
        for k in 0..j {
            diag -= a[j][k] * a[j][k];
        }
        let diag = diag.max(f64::MIN_POSITIVE).sqrt();
        a[j][j] = diag;
        for i in j + 1..n {
            let mut v = a[i][j];
            for k in 0..j {
                v -= a[i][k] * a[j][k];
            }
            a[i][j] = v / diag;
        }
    }
    for i in 0..n {
        for k in 0..i {
            b[i] -= a[i][k] * b[k];
        }
        b[i] /= a[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            b[i] -= a[k][i] * b[k];
        }
        b[i] /= a[i][i];
    }
    b
}
