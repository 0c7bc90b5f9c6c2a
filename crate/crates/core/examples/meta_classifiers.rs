//! Fit each meta-classifier on noisy two-model meta-features and compare their
//! probabilities on one row; save and reload a model.
//!
//!     cargo run --release --example meta_classifiers

use vulnstack::meta::{self, MetaKind, MetaModel, MetaParams};
use vulnstack::rng::SplitMix64;

// two "base models": the first is right 70% of the time, the second 60%
fn meta_features(n: usize, rng: &mut SplitMix64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let y = i % 5;
        let mut row = Vec::new();
        for accuracy in [0.7, 0.6] {
            let vote = if rng.next_f64() < accuracy { y } else { rng.below(5) };
            let mut p = [0.1; 5];
            p[vote] = 0.6;
            row.extend(p);
        }
        data.push(row);
        labels.push(y);
    }
    (data, labels)
}

fn main() -> vulnstack::Result<()> {
    let mut rng = SplitMix64::new(5);
    let (train, y_train) = meta_features(400, &mut rng);
    let (test, y_test) = meta_features(200, &mut rng);
    let params = MetaParams::default();

    for kind in MetaKind::ALL {
        let model = meta::fit(kind, &params, &train, &y_train)?;
        let pred = meta::predict(&model, &test)?;
        let acc = pred.iter().zip(&y_test).filter(|(p, y)| p == y).count() as f64 / y_test.len() as f64;
        let p = meta::predict_proba(&model, &test[..1])?[0];
        let shown: Vec<String> = p.as_slice().iter().map(|v| format!("{v:.3}")).collect();
        println!(
            "{:<8} accuracy {acc:.3}  first row [{}]",
            kind.label(),
            shown.join(", ")
        );
    }

    let model = meta::fit(MetaKind::Lr, &params, &train, &y_train)?;
    let path = std::env::temp_dir().join("vulnstack-lr.json");
    model.save(&path)?;
    let reloaded = MetaModel::load(&path)?;
    assert_eq!(
        meta::predict_proba(&model, &test)?,
        meta::predict_proba(&reloaded, &test)?
    );
    println!("saved and reloaded {}", path.display());
    Ok(())
}
