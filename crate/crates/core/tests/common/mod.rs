//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the library's metric or solver code.

#![allow(dead_code, clippy::needless_range_loop)]

use vulnstack::base_models::ProbVector;
use vulnstack::rng::SplitMix64;

pub const K: usize = 5;

/// Accuracy and support-weighted precision, recall and F1 in percent, one
/// class at a time with explicit counting loops. Undefined ratios count as 0.
pub fn weighted_metrics(y_true: &[usize], y_pred: &[usize]) -> [f64; 4] {
    let n = y_true.len() as f64;
    let mut correct = 0usize;
    for i in 0..y_true.len() {
        if y_true[i] == y_pred[i] {
            correct += 1;
        }
    }
    let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
    for c in 0..K {
        let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
        for i in 0..y_true.len() {
            match (y_true[i] == c, y_pred[i] == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                (false, false) => {}
            }
        }
        let support = (tp + fneg) as f64;
        let prec = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let rec = if tp + fneg == 0 {
            0.0
        } else {
            tp as f64 / (tp + fneg) as f64
        };
        let f1 = if prec + rec == 0.0 {
            0.0
        } else {
            2.0 * prec * rec / (prec + rec)
        };
        p += support / n * prec;
        r += support / n * rec;
        f += support / n * f1;
    }
    [100.0 * correct as f64 / n, 100.0 * p, 100.0 * r, 100.0 * f]
}

pub fn confusion_counts(y_true: &[usize], y_pred: &[usize]) -> [[u64; K]; K] {
    let mut m = [[0u64; K]; K];
    for t in 0..K {
        for p in 0..K {
            for i in 0..y_true.len() {
                if y_true[i] == t && y_pred[i] == p {
                    m[t][p] += 1;
                }
            }
        }
    }
    m
}

/// Fraction of (positive, negative) pairs ranked correctly, ties worth 0.5.
pub fn pair_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let (mut wins, mut pairs) = (0.0, 0usize);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if positive[i] && !positive[j] {
                pairs += 1;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    (pairs > 0).then(|| wins / pairs as f64)
}

/// One-vs-rest AUC in percent, averaged over classes with a defined AUC;
/// `weighted` weights by class support.
pub fn ovr_auc(y_true: &[usize], probs: &[ProbVector], weighted: bool) -> f64 {
    let (mut sum, mut weight) = (0.0, 0.0);
    for c in 0..K {
        let scores: Vec<f64> = probs.iter().map(|p| p.as_slice()[c]).collect();
        let positive: Vec<bool> = y_true.iter().map(|&y| y == c).collect();
        if let Some(auc) = pair_auc(&scores, &positive) {
            let w = if weighted {
                positive.iter().filter(|&&p| p).count() as f64
            } else {
                1.0
            };
            sum += w * auc;
            weight += w;
        }
    }
    100.0 * sum / weight
}

pub fn first_max(values: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

/// Mean negative log-likelihood of the true labels.
pub fn log_loss(probs: &[[f64; K]], labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (p, &y) in probs.iter().zip(labels) {
        total -= p[y].ln();
    }
    total / labels.len() as f64
}

pub fn rbf_gram(data: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    data.iter()
        .map(|a| {
            data.iter()
                .map(|b| {
                    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                    (-gamma * d2).exp()
                })
                .collect()
        })
        .collect()
}

/// `0.5 a'Qa - sum(a)` with `Q_ij = y_i y_j K_ij`.
pub fn dual_objective(gram: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * gram[i][j];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

/// Largest violation of the dual optimality conditions, `m(a) - M(a)` over
/// the up and low index sets.
pub fn kkt_residual(gram: &[Vec<f64>], y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let n = alpha.len();
    let grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * gram[i][j] * alpha[j]).sum::<f64>() - 1.0)
        .collect();
    let (mut m_up, mut m_low) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let v = -y[i] * grad[i];
        let up = (y[i] > 0.0 && alpha[i] < c) || (y[i] < 0.0 && alpha[i] > 0.0);
        let low = (y[i] > 0.0 && alpha[i] > 0.0) || (y[i] < 0.0 && alpha[i] < c);
        if up {
            m_up = m_up.max(v);
        }
        if low {
            m_low = m_low.min(v);
        }
    }
    (m_up - m_low).max(0.0)
}

/// Euclidean projection onto `{0 <= a <= c, y'a = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |mu: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - mu * yi).clamp(0.0, c)).collect() };
    let balance = |a: &[f64]| -> f64 { a.iter().zip(y).map(|(ai, yi)| ai * yi).sum() };
    let bound = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // balance is non-increasing in mu
        if balance(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Dense accelerated projected-gradient solve of the binary SVM dual.
/// Returns the solution and its objective.
pub fn qp_oracle(gram: &[Vec<f64>], y: &[f64], c: f64, iterations: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * gram[i][j]).collect())
        .collect();
    // Gershgorin bound on the largest eigenvalue
    let lipschitz = q
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let grad: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| q[i][j] * z[j]).sum::<f64>() - 1.0)
            .collect();
        let v: Vec<f64> = (0..n).map(|i| z[i] - step * grad[i]).collect();
        let next = project(&v, y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = (0..n)
            .map(|i| next[i] + (t - 1.0) / t_next * (next[i] - x[i]))
            .collect();
        x = next;
        t = t_next;
    }
    let objective = dual_objective(gram, y, &x);
    (x, objective)
}

/// Random labels in `0..5` with every class present, length `n >= 5`.
pub fn labels_with_all_classes(rng: &mut SplitMix64, n: usize) -> Vec<usize> {
    let mut y: Vec<usize> = (0..n).map(|i| if i < K { i } else { rng.below(K) }).collect();
    rng.shuffle(&mut y);
    y
}

/// Random probability rows drawn from a small pool so that ties occur.
pub fn tied_probs(rng: &mut SplitMix64, n: usize) -> Vec<ProbVector> {
    let pool_size = (n / 3).max(2);
    let pool: Vec<ProbVector> = (0..pool_size)
        .map(|_| {
            let raw: [f64; K] = std::array::from_fn(|_| (rng.below(10) + 1) as f64);
            ProbVector::normalized(raw)
        })
        .collect();
    (0..n).map(|_| pool[rng.below(pool_size)]).collect()
}

/// Two overlapping Gaussian-ish blobs in `d` dimensions, labels +1/-1.
pub fn two_blobs(rng: &mut SplitMix64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut data = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        let row = (0..d)
            .map(|_| {
                // sum of uniforms, roughly normal with variance 1
                let noise: f64 = (0..12).map(|_| rng.next_f64()).sum::<f64>() - 6.0;
                0.6 * label + noise
            })
            .collect();
        data.push(row);
        y.push(label);
    }
    (data, y)
}

pub fn abs_diff_max(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A corpus with `counts[c]` trivial samples of each class.
pub fn corpus_with_counts(counts: &[usize; K]) -> vulnstack::corpus::Corpus {
    let mut samples = Vec::new();
    for (class, &count) in counts.iter().enumerate() {
        for i in 0..count {
            let code = format!("int f{i}(void) {{ return {class}; }}");
            samples.push(vulnstack::corpus::CodeSample::new(
                format!("c{class}-{i:06}"),
                code,
                class,
            ));
        }
    }
    vulnstack::corpus::Corpus::from_samples("counts", samples).unwrap()
}

/// Writes a probability file in the external wire format for a simulated
/// model that votes for the true class with probability `skill`.
pub fn write_simulated_probs(
    path: &std::path::Path,
    name: &str,
    corpus: &vulnstack::corpus::Corpus,
    skill: f64,
    seed: u64,
) {
    let mut rng = SplitMix64::new(seed);
    let mut text = format!("{{\"model\":\"{name}\",\"classes\":5}}\n");
    for s in corpus {
        let y = s.label.unwrap();
        let vote = if rng.next_f64() < skill {
            y
        } else {
            (y + 1 + rng.below(K - 1)) % K
        };
        let mut p: [f64; K] = std::array::from_fn(|_| 0.05 + 0.1 * rng.next_f64());
        p[vote] += 1.0;
        let sum: f64 = p.iter().sum();
        let probs: Vec<f64> = p.iter().map(|v| v / sum).collect();
        text.push_str(&format!(
            "{{\"id\":\"{}\",\"probs\":{}}}\n",
            s.id,
            serde_json::to_string(&probs).unwrap()
        ));
    }
    std::fs::write(path, text).unwrap();
}
