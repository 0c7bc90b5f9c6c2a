//! Stack externally produced probability files (here simulated) in every
//! combination, the way fine-tuned transformer outputs would be consumed.
//!
//!     cargo run --release --example ablation_sweep

use std::path::Path;

use vulnstack::base_models::{ProbTable, ProbVector};
use vulnstack::corpus::Corpus;
use vulnstack::meta::MetaKind;
use vulnstack::render::render_text;
use vulnstack::rng::SplitMix64;
use vulnstack::stacking::{ablation_sweep, BaseSpec, DataSource, PipelineConfig};
use vulnstack::synthetic::marker_corpus;

// a model that is right with probability `skill` and otherwise confidently wrong
fn simulate(name: &str, corpus: &Corpus, skill: f64, seed: u64, path: &Path) -> vulnstack::Result<()> {
    let mut rng = SplitMix64::new(seed);
    let mut table = ProbTable::new(name);
    for s in corpus {
        let y = s.require_label()?;
        let vote = if rng.next_f64() < skill {
            y
        } else {
            (y + 1 + rng.below(4)) % 5
        };
        let mut p = [0.0; 5];
        for v in p.iter_mut() {
            *v = 0.05 + 0.1 * rng.next_f64();
        }
        p[vote] += 1.0;
        table.insert(s.id.clone(), ProbVector::normalized(p))?;
    }
    table.write(path)
}

fn main() -> vulnstack::Result<()> {
    let dir = std::env::temp_dir().join("vulnstack-sweep-example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let corpus = marker_corpus(1500, 21);
    let corpus_path = dir.join("corpus.jsonl");
    corpus.write_jsonl(&corpus_path)?;

    let mut bases = Vec::new();
    for (i, (name, skill)) in [("C", 0.72), ("G", 0.75), ("U", 0.78)].into_iter().enumerate() {
        let path = dir.join(format!("{name}.jsonl"));
        simulate(name, &corpus, skill, 100 + i as u64, &path)?;
        bases.push(BaseSpec::external(name, path));
    }

    let mut config = PipelineConfig::new(bases);
    config.data = Some(DataSource::Corpus {
        path: corpus_path,
        format: None,
    });
    config.meta = vec![MetaKind::Lr, MetaKind::Svm, MetaKind::Gbt];
    let subsets = [
        vec!["C"],
        vec!["G"],
        vec!["U"],
        vec!["C", "G"],
        vec!["G", "U"],
        vec!["C", "G", "U"],
    ]
    .map(|s| s.into_iter().map(String::from).collect())
    .to_vec();

    let outcome = ablation_sweep(&config, subsets)?;
    print!("{}", render_text(&outcome.result));
    println!("{} stacked rows", outcome.result.cells.len());
    Ok(())
}
