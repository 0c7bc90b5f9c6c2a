//! The two views the built-in base models see: C tokens hashed into
//! unigram/bigram buckets, and character 3- to 5-grams.
//!
//!     cargo run --example tokenize_and_featurize

use vulnstack::base_models::{featurize, featurize_chars, fnv1a64, normalize_chars, tokenize};

fn main() -> vulnstack::Result<()> {
    let code = r#"/* copy header */
int copy(char *dst, const char *src) {
    strcpy(dst, src);   // no bound
    return 0x1F;
}"#;

    for token in tokenize(code) {
        println!("{:<10} {}", format!("{:?}", token.kind), token.text);
    }

    let dim = 1 << 10;
    let tokens = featurize(&tokenize(code), dim)?;
    println!("\ntoken view: {} non-zero buckets of {dim}", tokens.entries.len());
    println!("bucket of `strcpy`: {}", fnv1a64(b"strcpy") as usize & (dim - 1));

    let normalized: String = normalize_chars(code).into_iter().collect();
    println!("\nchar view input: {normalized}");
    let chars = featurize_chars(code, dim)?;
    println!(
        "char view: {} non-zero buckets, squared norm {:.3}",
        chars.entries.len(),
        chars.squared_norm()
    );
    Ok(())
}
