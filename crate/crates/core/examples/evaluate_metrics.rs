//! Score a handful of predictions: confusion matrix, weighted metrics and
//! one-vs-rest AUC.
//!
//!     cargo run --example evaluate_metrics

use vulnstack::base_models::ProbVector;
use vulnstack::metrics::{auc_ovr, evaluate, format_pct, AucAverage};

fn main() -> vulnstack::Result<()> {
    let y_true = [0, 0, 1, 1, 2, 3, 3, 4, 4, 4];
    let probs = [
        [0.7, 0.1, 0.1, 0.05, 0.05],
        [0.3, 0.4, 0.1, 0.1, 0.1],
        [0.1, 0.6, 0.1, 0.1, 0.1],
        [0.2, 0.5, 0.1, 0.1, 0.1],
        [0.1, 0.1, 0.5, 0.2, 0.1],
        [0.1, 0.1, 0.1, 0.6, 0.1],
        [0.1, 0.1, 0.4, 0.3, 0.1],
        [0.05, 0.05, 0.1, 0.1, 0.7],
        [0.1, 0.1, 0.1, 0.1, 0.6],
        [0.4, 0.1, 0.1, 0.1, 0.3],
    ]
    .map(|p| ProbVector::new(p).expect("valid distribution"));

    let report = evaluate("example", &y_true, &probs)?;
    println!("confusion (rows = true class):");
    for row in report.confusion.0 {
        println!("  {row:?}");
    }
    for (name, value) in [
        ("accuracy", report.accuracy),
        ("precision", report.precision),
        ("recall", report.recall),
        ("f1", report.f1),
        ("auc (macro)", report.auc_macro),
        ("auc (weighted)", report.auc_weighted),
    ] {
        println!("{name:<15} {}", format_pct(value));
    }
    let weighted = auc_ovr(&y_true, &probs, AucAverage::Weighted)?;
    println!("weighted AUC recomputed: {}", format_pct(weighted));
    Ok(())
}
