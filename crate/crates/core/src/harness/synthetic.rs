//! Zipf-distributed synthetic corpora with tunable vocabulary overlap.
//!
//! Every category ranks `vocab_size` words and draws tokens from a Zipf law
//! over the ranks. For each (category, rank) pair an independent coin with
//! bias `similarity` decides whether that rank holds the shared word
//! `w<rank>` or a private word `c<category>w<rank>`. At similarity 1 all
//! categories are the same distribution; at 0 their supports are disjoint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::Corpora;
use crate::tokenizer::Token;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_categories: usize,
    pub vocab_size: usize,
    pub tokens_per_category: usize,
    pub similarity: f64,
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_categories: 18,
            vocab_size: 5000,
            tokens_per_category: 3100,
            similarity: 0.5,
            zipf_exponent: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_categories < 2 {
            return Err(invalid("synthetic corpora need at least 2 categories"));
        }
        if self.vocab_size < 10 {
            return Err(invalid("synthetic vocabulary must have at least 10 words"));
        }
        if self.tokens_per_category == 0 {
            return Err(invalid("tokens_per_category must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.similarity) {
            return Err(invalid(format!(
                "similarity must lie in [0, 1], got {}",
                self.similarity
            )));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return Err(invalid(format!(
                "zipf exponent must be >= 0, got {}",
                self.zipf_exponent
            )));
        }
        Ok(())
    }
}

pub fn category_name(index: usize) -> String {
    format!("c{index:02}")
}

pub fn generate_synthetic_corpora(spec: &SyntheticSpec) -> Result<Corpora> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let zipf = Zipf::new(spec.vocab_size as f64, spec.zipf_exponent)
        .map_err(|e| invalid(format!("zipf distribution: {e}")))?;

    let mut corpora = Corpora::with_capacity(spec.n_categories);
    for k in 0..spec.n_categories {
        let name = category_name(k);
        let vocab: Vec<Token> = (0..spec.vocab_size)
            .map(|rank| {
                // random::<f64>() is in [0, 1), so similarity 1 always shares and 0 never does
                let word = if rng.random::<f64>() < spec.similarity {
                    format!("w{rank}")
                } else {
                    format!("{name}w{rank}")
                };
                Token::new(word).expect("generated words contain no whitespace")
            })
            .collect();
        let tokens = (0..spec.tokens_per_category)
            .map(|_| {
                let rank = zipf.sample(&mut rng) as usize - 1;
                vocab[rank].clone()
            })
            .collect();
        corpora.insert(name, tokens);
    }
    Ok(corpora)
}
