//! Seeded synthetic corpora for demos and tests.
//!
//! [`marker_corpus`] plants one class-specific identifier in otherwise random
//! C-like code, so either base-model view can reach perfect accuracy.
//!
//! [`complementary_corpus`] carries two cues per sample, each repeated a few
//! times: a 4-digit constant (`v ^= NNNN;`), visible to the token view but
//! folded to `0000` by the character view, and a tag word in a comment
//! (`/* tag: WORD */`), visible to the character view but stripped by the
//! lexer. Each sample falls in one of three regions:
//!
//! | region        | constant from class | tag from class | share |
//! |---------------|---------------------|----------------|-------|
//! | `Agree`       | c                   | c              | 40%   |
//! | `TokenMisled` | c + 1 (mod 5)       | c              | 30%   |
//! | `CharMisled`  | c                   | c + 2 (mod 5)  | 30%   |
//!
//! A model restricted to one view is right about 70% of the time, while the
//! pair of cues identifies the class exactly: a disagreement of +1 means the
//! tag is right, +2 on the tag side means the constant is right.

use serde::{Deserialize, Serialize};

use crate::corpus::{CodeSample, Corpus, NUM_CLASSES};
use crate::rng::SplitMix64;

pub const MARKER_WORDS: [&str; NUM_CLASSES] = ["alpha", "bravo", "charlie", "delta", "echo"];

pub const TAG_WORDS: [&str; NUM_CLASSES] = ["spillway", "overrun", "wrapround", "dangling", "misc"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Agree,
    TokenMisled,
    CharMisled,
}

impl Region {
    /// Region of the `k`-th sample of a class: 4 of every 10 agree, 3 mislead
    /// each view.
    pub fn for_index(k: usize) -> Region {
        match k % 10 {
            0..=3 => Region::Agree,
            4..=6 => Region::TokenMisled,
            _ => Region::CharMisled,
        }
    }

    pub fn token_class(self, class: usize) -> usize {
        match self {
            Region::TokenMisled => (class + 1) % NUM_CLASSES,
            _ => class,
        }
    }

    pub fn char_class(self, class: usize) -> usize {
        match self {
            Region::CharMisled => (class + 2) % NUM_CLASSES,
            _ => class,
        }
    }
}

/// The 4-digit constant that cues `class` in the token view.
pub fn token_cue(class: usize) -> u32 {
    1000 + 101 * class as u32
}

const CUE_REPEATS: usize = 4;

/// A corpus together with the region of every sample, in corpus order.
#[derive(Debug, Clone)]
pub struct ComplementaryCorpus {
    pub corpus: Corpus,
    pub regions: Vec<Region>,
}

const IDENTS: &[&str] = &[
    "buf", "len", "src", "dst", "ptr", "idx", "count", "node", "head", "size", "tmp", "ctx", "data", "offset", "limit",
    "flags", "state", "item", "entry", "result",
];

const CALLS: &[&str] = &["memcpy", "strncpy", "memset", "process", "update", "check", "emit"];

fn ident(rng: &mut SplitMix64) -> &'static str {
    IDENTS[rng.below(IDENTS.len())]
}

fn filler_statement(rng: &mut SplitMix64) -> String {
    let a = ident(rng);
    let b = ident(rng);
    let c = ident(rng);
    let k = rng.below(64);
    match rng.below(6) {
        0 => format!("{a} = {b} + {k};"),
        1 => format!("if ({a} != NULL) {{ {b} = {a}->{c}; }}"),
        2 => format!("{}({a}, {b}, {c});", CALLS[rng.below(CALLS.len())]),
        3 => format!("for (i = 0; i < {a}; i++) {{ {b}[i] = {c}[i]; }}"),
        4 => format!("while ({a} > {k}) {{ {a}--; }}"),
        _ => format!("{a} += {b} * {k};"),
    }
}

fn function_body(rng: &mut SplitMix64, header_lines: &[String]) -> String {
    let name = format!("{}_{}", ident(rng), rng.below(1000));
    let mut lines = vec![format!("int {name}(char *{}, int n) {{", ident(rng))];
    lines.extend(header_lines.iter().map(|l| format!("    {l}")));
    for _ in 0..2 + rng.below(4) {
        lines.push(format!("    {}", filler_statement(rng)));
    }
    lines.push("    return v;".into());
    lines.push("}".into());
    lines.join("\n")
}

pub const MARKER_REPEATS: usize = 3;

/// `n` samples, classes assigned round-robin, each calling a class-specific
/// `vuln_<word>` function [`MARKER_REPEATS`] times near the top of the body.
/// The marker has no digits, so both views see it.
pub fn marker_corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = SplitMix64::new(seed);
    let samples = (0..n)
        .map(|i| {
            let class = i % NUM_CLASSES;
            let mut header = vec![format!("int v = {};", rng.below(100))];
            for _ in 0..MARKER_REPEATS {
                let marker = format!("vuln_{}({});", MARKER_WORDS[class], ident(&mut rng));
                let at = rng.below(header.len() + 1);
                header.insert(at, marker);
            }
            CodeSample::new(format!("m{i:05}"), function_body(&mut rng, &header), class)
        })
        .collect();
    Corpus::from_samples(&format!("synthetic:marker:{seed}"), samples).expect("generated ids are unique")
}

/// `n` samples with complementary token/character cues; see module docs.
pub fn complementary_corpus(n: usize, seed: u64) -> ComplementaryCorpus {
    let mut rng = SplitMix64::new(seed);
    let mut per_class = [0usize; NUM_CLASSES];
    let mut samples = Vec::with_capacity(n);
    let mut regions = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % NUM_CLASSES;
        let region = Region::for_index(per_class[class]);
        per_class[class] += 1;
        let constant = token_cue(region.token_class(class));
        let tag = TAG_WORDS[region.char_class(class)];
        let mut header = vec![format!("int v = {constant};")];
        for _ in 1..CUE_REPEATS {
            header.push(format!("v ^= {constant}; /* tag: {tag} */"));
        }
        samples.push(CodeSample::new(
            format!("s{i:05}"),
            function_body(&mut rng, &header),
            class,
        ));
        regions.push(region);
    }
    ComplementaryCorpus {
        corpus: Corpus::from_samples(&format!("synthetic:complementary:{seed}"), samples)
            .expect("generated ids are unique"),
        regions,
    }
}
