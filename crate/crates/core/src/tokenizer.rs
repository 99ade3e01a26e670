//! Whitespace word tokens and word-shape tokens.
//!
//! Shape tokens replace every character of a word with a coarse class code:
//!
//! | class                                   | code |
//! |-----------------------------------------|------|
//! | uppercase letter                        | `A`  |
//! | lowercase ascender `b d f h k l t`      | `a`  |
//! | lowercase descender `g j p q y`         | `g`  |
//! | lowercase `i`                           | `i`  |
//! | any other lowercase letter              | `x`  |
//! | digit                                   | `0`  |
//! | anything else                           | `.`  |
//!
//! Accented letters are classified by the base letter of their canonical
//! decomposition, so `é` shapes like `e` and `Ç` like `C`.

use std::borrow::Borrow;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::decompose_canonical;

use crate::error::{invalid, Error, Result};

/// The alphabet produced by [`shape_encode`].
pub const SHAPE_ALPHABET: [char; 7] = ['A', 'a', 'x', 'g', 'i', '0', '.'];

/// A non-empty run of non-whitespace characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(invalid("token must not be empty"));
        }
        if text.chars().any(char::is_whitespace) {
            return Err(invalid(format!("token {text:?} contains whitespace")));
        }
        Ok(Token(text))
    }

    /// Caller guarantees the invariants (non-empty, no whitespace).
    fn new_unchecked(text: String) -> Self {
        debug_assert!(!text.is_empty() && !text.chars().any(char::is_whitespace));
        Token(text)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl Borrow<str> for Token {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Token {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Token::new(value)
    }
}

impl From<Token> for String {
    fn from(token: Token) -> Self {
        token.0
    }
}

/// Which token stream a model is trained and evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerMode {
    #[default]
    Word,
    Shape,
}

impl TokenizerMode {
    pub fn tokenize(self, text: &str) -> Vec<Token> {
        match self {
            TokenizerMode::Word => word_tokenize(text),
            TokenizerMode::Shape => shape_encode(text),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TokenizerMode::Word => "word",
            TokenizerMode::Shape => "shape",
        }
    }
}

impl fmt::Display for TokenizerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TokenizerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(TokenizerMode::Word),
            "shape" => Ok(TokenizerMode::Shape),
            other => Err(invalid(format!(
                "unknown tokenizer mode `{other}` (expected `word` or `shape`)"
            ))),
        }
    }
}

/// Splits on Unicode whitespace. Case and punctuation are left untouched.
pub fn word_tokenize(text: &str) -> Vec<Token> {
    text.split_whitespace()
        .map(|w| Token::new_unchecked(w.to_owned()))
        .collect()
}

/// One shape token per whitespace-delimited word, same length in characters.
pub fn shape_encode(text: &str) -> Vec<Token> {
    text.split_whitespace()
        .map(|w| Token::new_unchecked(w.chars().map(shape_class).collect()))
        .collect()
}

/// Shape class code of a single character.
pub fn shape_class(c: char) -> char {
    let base = base_char(c);
    if base.is_numeric() {
        return '0';
    }
    if !base.is_alphabetic() {
        return '.';
    }
    if base.is_uppercase() {
        return 'A';
    }
    if !base.is_lowercase() {
        return '.';
    }
    match base {
        'b' | 'd' | 'f' | 'h' | 'k' | 'l' | 't' => 'a',
        'g' | 'j' | 'p' | 'q' | 'y' => 'g',
        'i' => 'i',
        _ => 'x',
    }
}

fn base_char(c: char) -> char {
    if c.is_ascii() {
        return c;
    }
    let mut first = None;
    decompose_canonical(c, |d| {
        first.get_or_insert(d);
    });
    first.unwrap_or(c)
}
