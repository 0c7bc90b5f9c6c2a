//! One-vs-rest RBF support vector machine with Platt-calibrated probabilities.
//!
//! Each binary problem solves the soft-margin dual
//!
//! ```text
//! min_a  0.5 * a'Qa - sum(a)   s.t.  0 <= a_i <= C,  y'a = 0,
//! Q_ij = y_i y_j exp(-gamma * |x_i - x_j|^2)
//! ```
//!
//! by SMO with second-order working-set selection, stopping when the maximal
//! KKT violation `m(a) - M(a)` falls below `tol`. The decision value is
//! `f(x) = sum_i a_i y_i K(x_i, x) - rho`.
//!
//! Per class, a sigmoid `P(y = 1 | f) = 1 / (1 + exp(A f + B))` is fit to
//! out-of-fold decision values from a stratified k-fold split; the final class
//! probabilities are the calibrated scores normalized to sum to one.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const MIN_CALIBRATION_SAMPLES: usize = 5;

const TAU: f64 = 1e-12;
// kernel rows kept per solve
const CACHE_BYTES: usize = 128 << 20;
const FOLD_STREAM: u64 = 0x504c_4154_0000_0000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    /// `1 / (d * Var(Z))` over all entries of the training matrix, or 1 when
    /// the variance is zero.
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: Gamma,
    pub tol: f64,
    pub calibration_folds: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: Gamma::Scale,
            tol: 1e-3,
            calibration_folds: 3,
            seed: 42,
            max_iter: 10_000_000,
        }
    }
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * sq).exp()
}

pub fn scale_gamma(data: &[Vec<f64>]) -> f64 {
    let d = data[0].len();
    let n = (data.len() * d) as f64;
    let mean: f64 = data.iter().flatten().sum::<f64>() / n;
    let var: f64 = data.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

/// Solution of one binary dual problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// `0.5 * a'Qa - sum(a)` at the solution.
    pub objective: f64,
    /// Maximal KKT violation `m(a) - M(a)` at the solution.
    pub kkt_gap: f64,
    pub iterations: usize,
}

struct KernelRows<'a> {
    data: &'a [&'a [f64]],
    gamma: f64,
    cache: HashMap<usize, Vec<f64>>,
    max_rows: usize,
}

impl<'a> KernelRows<'a> {
    fn new(data: &'a [&'a [f64]], gamma: f64) -> Self {
        let row_bytes = data.len().max(1) * std::mem::size_of::<f64>();
        Self {
            data,
            gamma,
            cache: HashMap::new(),
            max_rows: (CACHE_BYTES / row_bytes).max(2),
        }
    }

    fn row(&mut self, i: usize) -> std::borrow::Cow<'_, [f64]> {
        if !self.cache.contains_key(&i) {
            let row: Vec<f64> = self.data.iter().map(|xj| rbf(self.data[i], xj, self.gamma)).collect();
            if self.cache.len() >= self.max_rows {
                return std::borrow::Cow::Owned(row);
            }
            self.cache.insert(i, row);
        }
        std::borrow::Cow::Borrowed(&self.cache[&i])
    }
}

/// Solves the binary dual for labels `y` in {-1, +1}.
pub fn solve_dual(data: &[&[f64]], y: &[f64], c: f64, gamma: f64, tol: f64, max_iter: usize) -> DualSolution {
    let n = data.len();
    let mut kernel = KernelRows::new(data, gamma);
    // RBF diagonal is exactly 1
    let qd = vec![1.0; n];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];

    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut gap;
    loop {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = if y[t] > 0.0 {
                !is_upper(alpha[t])
            } else {
                !is_lower(alpha[t])
            };
            if in_up && v >= gmax {
                gmax = v;
                i_sel = Some(t);
            }
        }
        // j: second-order choice in I_low; also track M(a)
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        if let Some(i) = i_sel {
            let ki = kernel.row(i).into_owned();
            for t in 0..n {
                let in_low = if y[t] > 0.0 {
                    !is_lower(alpha[t])
                } else {
                    !is_upper(alpha[t])
                };
                if !in_low {
                    continue;
                }
                let v = y[t] * grad[t];
                gmax2 = gmax2.max(v);
                let grad_diff = gmax + v;
                if grad_diff > 0.0 {
                    let quad = qd[i] + qd[t] - 2.0 * ki[t];
                    let quad = if quad > 0.0 { quad } else { TAU };
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        gap = gmax + gmax2;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            break;
        };
        if gap < tol || iterations >= max_iter {
            break;
        }
        iterations += 1;

        let ki = kernel.row(i).into_owned();
        let kj = kernel.row(j).into_owned();
        let qij = y[i] * y[j] * ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = qd[i] + qd[j] + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = qd[i] + qd[j] - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    let rho = compute_rho(&alpha, &grad, y, c);
    let objective = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() / 2.0;
    DualSolution {
        alpha,
        rho,
        objective,
        kkt_gap: gap.max(0.0),
        iterations,
    }
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Sigmoid calibration `P(y = 1 | f) = 1 / (1 + exp(a * f + b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

impl Platt {
    pub fn probability(&self, decision: f64) -> f64 {
        let fapb = decision * self.a + self.b;
        if fapb >= 0.0 {
            let e = (-fapb).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + fapb.exp())
        }
    }

    /// Fits `a, b` by Newton's method with backtracking on the regularized
    /// targets `(N+ + 1) / (N+ + 2)` and `1 / (N- + 2)`.
    pub fn fit(decisions: &[f64], positive: &[bool]) -> Platt {
        let prior1 = positive.iter().filter(|&&p| p).count() as f64;
        let prior0 = positive.len() as f64 - prior1;
        let hi = (prior1 + 1.0) / (prior1 + 2.0);
        let lo = 1.0 / (prior0 + 2.0);
        let targets: Vec<f64> = positive.iter().map(|&p| if p { hi } else { lo }).collect();

        let objective = |a: f64, b: f64| -> f64 {
            decisions
                .iter()
                .zip(&targets)
                .map(|(&f, &t)| {
                    let fapb = f * a + b;
                    if fapb >= 0.0 {
                        t * fapb + (-fapb).exp().ln_1p()
                    } else {
                        (t - 1.0) * fapb + fapb.exp().ln_1p()
                    }
                })
                .sum()
        };

        const MAX_ITER: usize = 100;
        const MIN_STEP: f64 = 1e-10;
        const SIGMA: f64 = 1e-12;
        const EPS: f64 = 1e-5;
        let mut a = 0.0;
        let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
        let mut fval = objective(a, b);
        for _ in 0..MAX_ITER {
            let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
            for (&f, &t) in decisions.iter().zip(&targets) {
                let fapb = f * a + b;
                let (p, q) = if fapb >= 0.0 {
                    let e = (-fapb).exp();
                    (e / (1.0 + e), 1.0 / (1.0 + e))
                } else {
                    let e = fapb.exp();
                    (1.0 / (1.0 + e), e / (1.0 + e))
                };
                let d2 = p * q;
                h11 += f * f * d2;
                h22 += d2;
                h21 += f * d2;
                let d1 = t - p;
                g1 += f * d1;
                g2 += d1;
            }
            if g1.abs() < EPS && g2.abs() < EPS {
                break;
            }
            let det = h11 * h22 - h21 * h21;
            let da = -(h22 * g1 - h21 * g2) / det;
            let db = -(-h21 * g1 + h11 * g2) / det;
            let gd = g1 * da + g2 * db;
            let mut step = 1.0;
            while step >= MIN_STEP {
                let (na, nb) = (a + step * da, b + step * db);
                let nf = objective(na, nb);
                if nf < fval + 1e-4 * step * gd {
                    a = na;
                    b = nb;
                    fval = nf;
                    break;
                }
                step /= 2.0;
            }
            if step < MIN_STEP {
                break;
            }
        }
        Platt { a, b }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub class: usize,
    /// Support vectors with their coefficients `alpha_i * y_i`.
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub calibration: Platt,
    pub kkt_gap: f64,
    pub iterations: usize,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64], gamma: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * rbf(sv, x, gamma))
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub params: SvmParams,
    pub gamma: f64,
    pub per_class: Vec<BinarySvm>,
}

impl SvmModel {
    pub fn predict_proba_row(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        let mut p = [0.0; NUM_CLASSES];
        for m in &self.per_class {
            p[m.class] = m.calibration.probability(m.decision(x, self.gamma));
        }
        let sum: f64 = p.iter().sum();
        if sum > 0.0 {
            p.map(|v| v / sum)
        } else {
            let share = 1.0 / self.per_class.len() as f64;
            let mut u = [0.0; NUM_CLASSES];
            for m in &self.per_class {
                u[m.class] = share;
            }
            u
        }
    }
}

struct Trained {
    alpha: Vec<f64>,
    sol: DualSolution,
}

fn train_binary(rows: &[&[f64]], y: &[f64], params: &SvmParams, gamma: f64) -> Trained {
    let sol = solve_dual(rows, y, params.c, gamma, params.tol, params.max_iter);
    Trained {
        alpha: sol.alpha.clone(),
        sol,
    }
}

fn decision_with(rows: &[&[f64]], y: &[f64], t: &Trained, x: &[f64], gamma: f64) -> f64 {
    rows.iter()
        .zip(y)
        .zip(&t.alpha)
        .filter(|(_, a)| **a > 0.0)
        .map(|((r, yi), a)| a * yi * rbf(r, x, gamma))
        .sum::<f64>()
        - t.sol.rho
}

/// Stratified fold index for each entry of `positive`.
fn stratified_folds(positive: &[bool], k: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let mut fold = vec![0; positive.len()];
    for side in [true, false] {
        let mut members: Vec<usize> = (0..positive.len()).filter(|&i| positive[i] == side).collect();
        rng.shuffle(&mut members);
        for (pos, &i) in members.iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    fold
}

pub(crate) fn fit(
    data: &[Vec<f64>],
    labels: &[usize],
    present: &[bool; NUM_CLASSES],
    params: &SvmParams,
) -> Result<SvmModel> {
    let mut counts = [0usize; NUM_CLASSES];
    for &l in labels {
        counts[l] += 1;
    }
    for class in 0..NUM_CLASSES {
        if present[class] && counts[class] < MIN_CALIBRATION_SAMPLES {
            return Err(Error::Calibration {
                class,
                count: counts[class],
                needed: MIN_CALIBRATION_SAMPLES,
            });
        }
    }
    if params.calibration_folds < 2 {
        return Err(Error::Invalid("SVM calibration needs at least 2 folds".into()));
    }
    let gamma = match params.gamma {
        Gamma::Scale => scale_gamma(data),
        Gamma::Value(g) if g > 0.0 && g.is_finite() => g,
        Gamma::Value(g) => return Err(Error::Invalid(format!("invalid RBF gamma {g}"))),
    };
    let rows: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();

    let mut per_class = Vec::new();
    for class in (0..NUM_CLASSES).filter(|&c| present[c]) {
        let positive: Vec<bool> = labels.iter().map(|&l| l == class).collect();
        let y: Vec<f64> = positive.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();

        let k = params.calibration_folds;
        let mut rng = SplitMix64::derive(params.seed, FOLD_STREAM + class as u64);
        let fold = stratified_folds(&positive, k, &mut rng);
        let mut oof = vec![0.0; data.len()];
        for f in 0..k {
            let train_idx: Vec<usize> = (0..data.len()).filter(|&i| fold[i] != f).collect();
            let sub_rows: Vec<&[f64]> = train_idx.iter().map(|&i| rows[i]).collect();
            let sub_y: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
            let t = train_binary(&sub_rows, &sub_y, params, gamma);
            for i in (0..data.len()).filter(|&i| fold[i] == f) {
                oof[i] = decision_with(&sub_rows, &sub_y, &t, rows[i], gamma);
            }
        }
        let calibration = Platt::fit(&oof, &positive);

        let full = train_binary(&rows, &y, params, gamma);
        let (support, coef) = full
            .alpha
            .iter()
            .enumerate()
            .filter(|(_, a)| **a > 0.0)
            .map(|(i, a)| (data[i].clone(), a * y[i]))
            .unzip();
        per_class.push(BinarySvm {
            class,
            support,
            coef,
            rho: full.sol.rho,
            calibration,
            kkt_gap: full.sol.kkt_gap,
            iterations: full.sol.iterations,
        });
    }
    Ok(SvmModel {
        params: *params,
        gamma,
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_gamma_matches_definition() {
        let data = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        // mean 0.5, var 0.25, d 2 -> 1 / 0.5
        assert!((scale_gamma(&data) - 2.0).abs() < 1e-15);
        assert_eq!(scale_gamma(&[vec![3.0, 3.0]]), 1.0);
    }

    #[test]
    fn platt_is_monotone_decreasing_in_a() {
        let decisions = [-2.0, -1.5, -0.3, 0.2, 0.9, 1.7, -0.1, 0.4];
        let positive = [false, false, false, true, true, true, true, false];
        let p = Platt::fit(&decisions, &positive);
        assert!(p.a < 0.0);
        let probs: Vec<f64> = (-20..=20).map(|v| p.probability(v as f64 / 5.0)).collect();
        assert!(probs.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn two_point_problem_has_closed_form() {
        // two points at squared distance 1: K12 = exp(-gamma)
        let a = [0.0, 0.0];
        let b = [1.0, 0.0];
        let rows: Vec<&[f64]> = vec![&a, &b];
        let gamma = 0.5;
        let sol = solve_dual(&rows, &[1.0, -1.0], 10.0, gamma, 1e-9, 1000);
        // alpha1 = alpha2 = 2 / (K11 + K22 - 2 K12)
        let expected = 2.0 / (2.0 - 2.0 * (-gamma).exp());
        assert!((sol.alpha[0] - expected).abs() < 1e-9);
        assert!((sol.alpha[1] - expected).abs() < 1e-9);
        assert!(sol.rho.abs() < 1e-9);
    }

    #[test]
    fn folds_are_stratified() {
        let positive: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let fold = stratified_folds(&positive, 3, &mut SplitMix64::new(1));
        for f in 0..3 {
            let pos = (0..30).filter(|&i| fold[i] == f && positive[i]).count();
            let neg = (0..30).filter(|&i| fold[i] == f && !positive[i]).count();
            assert_eq!(
                (pos, neg),
                (10 / 3 + usize::from(f < 10 % 3), 20 / 3 + usize::from(f < 20 % 3))
            );
        }
    }
}
