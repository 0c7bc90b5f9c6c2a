mod common;

use common::{
    confusion_counts, first_max, labels_with_all_classes, ovr_auc, pair_auc, tied_probs, weighted_metrics, K,
};
use vulnstack::base_models::ProbVector;
use vulnstack::metrics::{
    auc_ovr, auc_ovr_allow_missing, binary_auc, classification_metrics, confusion_matrix, evaluate, format_pct,
    AucAverage, ConfusionMatrix,
};
use vulnstack::rng::SplitMix64;

#[test]
fn confusion_matches_double_loop_counter() {
    let mut rng = SplitMix64::new(21);
    for _ in 0..50 {
        let n = 1 + rng.below(60);
        let y_true: Vec<usize> = (0..n).map(|_| rng.below(K)).collect();
        let y_pred: Vec<usize> = (0..n).map(|_| rng.below(K)).collect();
        assert_eq!(
            confusion_matrix(&y_true, &y_pred).unwrap().0,
            confusion_counts(&y_true, &y_pred)
        );
    }
}

#[test]
fn confusion_rejects_bad_input() {
    assert!(confusion_matrix(&[0, 1], &[0]).is_err());
    assert!(confusion_matrix(&[0, 5], &[0, 1]).is_err());
}

#[test]
fn toy_matrix_matches_per_class_oracle() {
    let toy = [[2u64, 1, 0], [0, 2, 0], [1, 0, 4]];
    let mut counts = [[0u64; K]; K];
    let (mut y_true, mut y_pred) = (Vec::new(), Vec::new());
    for t in 0..3 {
        for p in 0..3 {
            counts[t][p] = toy[t][p];
            for _ in 0..toy[t][p] {
                y_true.push(t);
                y_pred.push(p);
            }
        }
    }
    let m = classification_metrics(&ConfusionMatrix(counts)).unwrap();
    let oracle = weighted_metrics(&y_true, &y_pred);
    for (got, want) in [m.accuracy, m.precision, m.recall, m.f1].iter().zip(oracle) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    // by hand: 8 of 10 correct
    assert!((m.accuracy - 80.0).abs() < 1e-12);
    assert!((m.per_class[0].precision - 200.0 / 3.0).abs() < 1e-12);
    assert!((m.per_class[2].recall - 80.0).abs() < 1e-12);
    assert_eq!(m.per_class[3].support, 0);
}

#[test]
fn random_sets_match_brute_force_and_recall_equals_accuracy() {
    let mut rng = SplitMix64::new(22);
    for _ in 0..200 {
        let n = 1 + rng.below(50);
        let y_true: Vec<usize> = (0..n).map(|_| rng.below(K)).collect();
        let y_pred: Vec<usize> = (0..n).map(|_| rng.below(K)).collect();
        let m = classification_metrics(&confusion_matrix(&y_true, &y_pred).unwrap()).unwrap();
        let oracle = weighted_metrics(&y_true, &y_pred);
        for (got, want) in [m.accuracy, m.precision, m.recall, m.f1].iter().zip(oracle) {
            assert!((got - want).abs() < 1e-9);
        }
        assert_eq!(m.recall, m.accuracy);
    }
}

#[test]
fn thirty_random_scores_match_pair_counting() {
    let mut rng = SplitMix64::new(23);
    let scores: Vec<f64> = (0..30).map(|_| rng.next_f64()).collect();
    let positive: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
    let got = binary_auc(&scores, &positive).unwrap();
    // binary AUC is a fraction
    assert!((got - pair_auc(&scores, &positive).unwrap()).abs() < 1e-9);
}

#[test]
fn ovr_auc_matches_pair_counting_with_ties() {
    let mut rng = SplitMix64::new(24);
    for _ in 0..100 {
        let n = K + rng.below(96);
        let y = labels_with_all_classes(&mut rng, n);
        let probs = tied_probs(&mut rng, n);
        let macro_auc = auc_ovr(&y, &probs, AucAverage::Macro).unwrap();
        let weighted = auc_ovr(&y, &probs, AucAverage::Weighted).unwrap();
        assert!((macro_auc - ovr_auc(&y, &probs, false)).abs() < 1e-9);
        assert!((weighted - ovr_auc(&y, &probs, true)).abs() < 1e-9);
    }
}

#[test]
fn missing_class_needs_explicit_permission() {
    let y = vec![0, 1, 2, 3, 0, 1];
    let probs: Vec<ProbVector> = (0..6)
        .map(|i| ProbVector::normalized([1.0 + i as f64, 1.0, 2.0, 1.0, 1.0]))
        .collect();
    let err = auc_ovr(&y, &probs, AucAverage::Macro).unwrap_err();
    assert!(err.to_string().contains('4'), "{err}");
    let (value, skipped) = auc_ovr_allow_missing(&y, &probs, AucAverage::Macro).unwrap();
    assert_eq!(skipped, vec![4]);
    assert!((value - ovr_auc(&y, &probs, false)).abs() < 1e-12);
}

#[test]
fn uniform_probabilities_predict_class_zero() {
    let y = vec![0, 1, 2, 3, 4, 0, 0, 3];
    let probs = vec![ProbVector::uniform(); y.len()];
    let report = evaluate("uniform", &y, &probs).unwrap();
    assert!((report.accuracy - 37.5).abs() < 1e-12);
    assert_eq!(report.auc_macro, 50.0);
    assert_eq!(report.auc_weighted, 50.0);
}

#[test]
fn evaluation_of_three_hundred_samples_matches_oracles() {
    let mut rng = SplitMix64::new(25);
    let y = labels_with_all_classes(&mut rng, 300);
    let probs: Vec<ProbVector> = y
        .iter()
        .map(|&label| {
            let raw: [f64; K] = std::array::from_fn(|c| rng.next_f64() + if c == label { 0.5 } else { 0.0 });
            ProbVector::normalized(raw)
        })
        .collect();
    let report = evaluate("synthetic", &y, &probs).unwrap();
    let y_pred: Vec<usize> = probs.iter().map(|p| first_max(p.as_slice())).collect();
    let [acc, prec, rec, f1] = weighted_metrics(&y, &y_pred);
    assert!((report.accuracy - acc).abs() < 1e-9);
    assert!((report.precision - prec).abs() < 1e-9);
    assert!((report.recall - rec).abs() < 1e-9);
    assert!((report.f1 - f1).abs() < 1e-9);
    assert!((report.auc_macro - ovr_auc(&y, &probs, false)).abs() < 1e-9);
    assert!((report.auc_weighted - ovr_auc(&y, &probs, true)).abs() < 1e-9);
    assert_eq!(report.confusion.0, confusion_counts(&y, &y_pred));
    assert!(report.warnings.is_empty());
}

#[test]
fn percentages_round_half_to_even() {
    assert_eq!(format_pct(81.545), "81.54");
    assert_eq!(format_pct(100.0), "100.00");
    assert_eq!(format_pct(0.125), "0.12");
}
