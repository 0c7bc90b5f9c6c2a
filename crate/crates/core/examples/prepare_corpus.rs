//! Load a JSONL corpus, drop null entries, split 80/10/10 per class and cap
//! the training split.
//!
//!     cargo run --example prepare_corpus

use vulnstack::corpus::{clean, downsample, load_corpus, stratified_split, write_splits, Format, DEFAULT_RATIOS};
use vulnstack::render::render_distribution;
use vulnstack::synthetic::marker_corpus;

fn main() -> vulnstack::Result<()> {
    let dir = std::env::temp_dir().join("vulnstack-prepare-example");
    std::fs::create_dir_all(&dir).expect("temp dir");

    // a corpus file with one unusable record appended
    let path = dir.join("corpus.jsonl");
    marker_corpus(500, 11).write_jsonl(&path)?;
    let mut text = std::fs::read_to_string(&path).expect("read back");
    text.push_str("{\"id\": \"blank\", \"code\": \"   \", \"label\": 2}\n");
    std::fs::write(&path, text).expect("append");

    let corpus = load_corpus(&path, Format::Jsonl)?;
    let cleaned = clean(&corpus);
    println!("loaded {} samples, {} after cleaning", corpus.len(), cleaned.len());

    let mut splits = stratified_split(&cleaned, DEFAULT_RATIOS, 7)?;
    splits.train = downsample(&splits.train, &[80, 80, 20, 80, 80], 7)?;
    print!(
        "{}",
        render_distribution(
            &splits.train.distribution(),
            &splits.validation.distribution(),
            &splits.test.distribution()
        )
    );

    for file in write_splits(&splits, &dir.join("splits"))? {
        println!("wrote {}", file.display());
    }
    Ok(())
}
