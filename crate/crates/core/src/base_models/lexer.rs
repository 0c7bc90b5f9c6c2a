//! A total C-family lexer.
//!
//! Whitespace and comments are skipped; everything else becomes a token.
//! Bytes that fit no rule become single-character `Punct` tokens, so lexing
//! never fails. Unterminated comments and literals run to end of input.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Number,
    String,
    Char,
    Operator,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
}

impl Token {
    fn new(kind: TokenKind, text: &str) -> Self {
        Self {
            kind,
            text: text.to_string(),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "auto",
    "bool",
    "break",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "delete",
    "do",
    "double",
    "else",
    "enum",
    "extern",
    "false",
    "float",
    "for",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "namespace",
    "new",
    "nullptr",
    "private",
    "protected",
    "public",
    "register",
    "restrict",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "template",
    "this",
    "throw",
    "true",
    "try",
    "typedef",
    "typename",
    "union",
    "unsigned",
    "using",
    "virtual",
    "void",
    "volatile",
    "while",
];

// longest first so maximal munch works with a linear scan
const OPERATORS: &[&str] = &[
    "<<=", ">>=", "...", "->*", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "::", "+", "-", "*", "/", "%", "<", ">", "=", "!", "&", "|", "^", "~", "?", ":", ".",
];

const PUNCT: &[u8] = b"(){}[];,#";

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.binary_search(&word).is_ok()
}

/// Splits C-family source into tokens.
pub fn tokenize(code: &str) -> Vec<Token> {
    token_spans(code)
        .into_iter()
        .map(|(kind, span)| Token::new(kind, &code[span]))
        .collect()
}

/// Token kinds with their byte ranges in `code`.
pub(crate) fn token_spans(code: &str) -> Vec<(TokenKind, std::ops::Range<usize>)> {
    let bytes = code.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if bytes[i..].starts_with(b"//") {
            i = find_from(bytes, i + 2, b"\n").unwrap_or(bytes.len());
            continue;
        }
        if bytes[i..].starts_with(b"/*") {
            i = find_from(bytes, i + 2, b"*/").map_or(bytes.len(), |end| end + 2);
            continue;
        }

        let start = i;
        let kind = if b.is_ascii_alphabetic() || b == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            if is_keyword(&code[start..i]) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if b.is_ascii_digit() || (b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            i = scan_number(bytes, i);
            TokenKind::Number
        } else if b == b'"' {
            i = scan_quoted(bytes, i, b'"');
            TokenKind::String
        } else if b == b'\'' {
            i = scan_quoted(bytes, i, b'\'');
            TokenKind::Char
        } else if let Some(op) = OPERATORS.iter().find(|op| bytes[i..].starts_with(op.as_bytes())) {
            i += op.len();
            TokenKind::Operator
        } else if PUNCT.contains(&b) {
            i += 1;
            TokenKind::Punct
        } else {
            // unknown byte: emit the whole UTF-8 character
            i += code[i..].chars().next().map_or(1, char::len_utf8);
            TokenKind::Punct
        };
        tokens.push((kind, start..i));
    }
    tokens
}

fn find_from(haystack: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    haystack
        .get(from..)?
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|p| p + from)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() {
        let c = bytes[i];
        let exponent_sign = (c == b'+' || c == b'-')
            && i > 0
            && matches!(bytes[i - 1], b'e' | b'E' | b'p' | b'P')
            && !is_hex_prefix(bytes, i);
        if c.is_ascii_alphanumeric() || c == b'.' || c == b'_' || c == b'\'' || exponent_sign {
            i += 1;
        } else {
            break;
        }
    }
    i
}

// `0xE+1` is hex E plus 1, not an exponent
fn is_hex_prefix(bytes: &[u8], i: usize) -> bool {
    let mut j = i;
    while j > 0 && bytes[j - 1].is_ascii_alphanumeric() {
        j -= 1;
    }
    bytes[j..i].len() > 1
        && bytes[j] == b'0'
        && matches!(bytes[j + 1], b'x' | b'X')
        && !matches!(bytes[i - 1], b'p' | b'P')
}

fn scan_quoted(bytes: &[u8], start: usize, quote: u8) -> usize {
    let mut i = start + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i = (i + 1 + bytes.get(i + 1).map_or(0, |&b| utf8_len(b))).min(bytes.len()),
            b'\n' => return i,
            c if c == quote => return i + 1,
            _ => i += 1,
        }
    }
    bytes.len()
}

fn utf8_len(lead: u8) -> usize {
    match lead {
        0xF0..=0xFF => 4,
        0xE0..=0xEF => 3,
        0xC0..=0xDF => 2,
        _ => 1,
    }
}
