//! Two built-in base models with complementary blind spots, stacked by all
//! four meta-classifiers.
//!
//!     cargo run --release --example stacking_pipeline

use vulnstack::base_models::BuiltinKind;
use vulnstack::render::render_text;
use vulnstack::stacking::{run_on_corpus, BaseSpec, PipelineConfig};
use vulnstack::synthetic::complementary_corpus;

fn main() -> vulnstack::Result<()> {
    let data = complementary_corpus(2000, 1);
    let mut config = PipelineConfig::new(vec![
        BaseSpec::builtin("T", BuiltinKind::HashedTokenSoftmax),
        BaseSpec::builtin("H", BuiltinKind::CharNgramSoftmax),
    ]);
    config.seed = 1;

    let outcome = run_on_corpus(&data.corpus, &config)?;
    print!("{}", render_text(&outcome.result));
    for (stage, seconds) in &outcome.stage_seconds {
        println!("{stage:<14} {seconds:.2}s");
    }
    Ok(())
}
