//! Train both built-in base models, score held-out samples, and round-trip
//! one model's predictions through the external probability format.
//!
//!     cargo run --release --example train_base_models

use vulnstack::base_models::{load_external_probs, train_builtin, BaseModel, BuiltinKind, ProbTable, SoftmaxConfig};
use vulnstack::corpus::{stratified_split, DEFAULT_RATIOS};
use vulnstack::synthetic::marker_corpus;

fn accuracy(model: &BaseModel, corpus: &vulnstack::corpus::Corpus) -> vulnstack::Result<f64> {
    let mut correct = 0;
    for s in corpus {
        if model.predict_proba_base(s)?.argmax() == s.require_label()? {
            correct += 1;
        }
    }
    Ok(correct as f64 / corpus.len() as f64)
}

fn main() -> vulnstack::Result<()> {
    let splits = stratified_split(&marker_corpus(200, 3), DEFAULT_RATIOS, 1)?;
    let config = SoftmaxConfig::default();

    let token = train_builtin("T", BuiltinKind::HashedTokenSoftmax, &splits.train, &config)?;
    let chars = train_builtin("H", BuiltinKind::CharNgramSoftmax, &splits.train, &config)?;
    for model in [&token, &chars] {
        let history = &model.softmax().expect("built-in").objective_history;
        println!(
            "{} ({}): loss {:.4} -> {:.4}, test accuracy {:.3}",
            model.name(),
            model.kind_name(),
            history[0],
            history[history.len() - 1],
            accuracy(model, &splits.test)?
        );
    }

    let mut table = ProbTable::new("T");
    for s in &splits.test {
        table.insert(s.id.clone(), token.predict_proba_base(s)?)?;
    }
    let path = std::env::temp_dir().join("vulnstack-token-probs.jsonl");
    table.write(&path)?;
    let external = BaseModel::external("T-file", load_external_probs(&path)?);
    println!(
        "reloaded {} rows, test accuracy {:.3}",
        table.len(),
        accuracy(&external, &splits.test)?
    );
    Ok(())
}
