//! Sequential text-stream classification with confidence-interval evidence.
//!
//! Every category keeps three running log-evidence totals (low, base, high).
//! Each incoming token adds `ln(p(t|l) / p(t))` to them, using the lower,
//! central and upper estimates of `p(t|l)` obtained from binomial confidence
//! intervals over the training counts. Classification halts as soon as the
//! leading category's base evidence exceeds an activation threshold and its
//! low evidence beats the high evidence of every rival.
//!
//! The crate is organised bottom-up:
//!
//! - [`tokenizer`]: whitespace words and word-shape tokens.
//! - [`estimator`]: probability triples from token counts.
//! - [`model`]: training, lookup and the line-oriented model file.
//! - [`classifier`]: accumulator sessions and the stopping rule.
//! - [`harness`]: corpus splitting, threshold sweeps, reports and a
//!   synthetic corpus generator.

pub mod classifier;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod model;
pub mod tokenizer;

pub use classifier::{classify_stream, Accumulator, ClassifierConfig, Decision, EndPolicy, Session, StreamOutcome};
pub use error::{Error, Result};
pub use estimator::{EstimatorConfig, ProbabilityTriple};
pub use model::{CategoryModel, Corpora, CountTable, GlobalModel, FORMAT_VERSION};
pub use tokenizer::{shape_encode, word_tokenize, Token, TokenizerMode};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
