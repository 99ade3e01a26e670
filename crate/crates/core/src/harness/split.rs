use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tokenizer::Token;

/// Sizes of the non-overlapping files cut from each category's corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_sizes: Vec<usize>,
    pub test_file_sizes: Vec<usize>,
    pub files_per_size: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_sizes: vec![2000, 200],
            test_file_sizes: vec![1, 5, 10, 20],
            files_per_size: 25,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.train_sizes.is_empty() || self.test_file_sizes.is_empty() {
            return Err(invalid("split needs at least one training size and one test size"));
        }
        if self.files_per_size == 0 {
            return Err(invalid("files_per_size must be at least 1"));
        }
        if self.train_sizes.iter().chain(&self.test_file_sizes).any(|&s| s == 0) {
            return Err(invalid("all split sizes must be at least 1"));
        }
        Ok(())
    }

    /// Tokens needed per category.
    pub fn demand(&self) -> usize {
        self.train_sizes.iter().sum::<usize>() + self.files_per_size * self.test_file_sizes.iter().sum::<usize>()
    }

    /// Slice lengths in canonical order: training files, then test files
    /// grouped by size.
    fn slice_lengths(&self) -> Vec<usize> {
        let tests = self
            .test_file_sizes
            .iter()
            .flat_map(|&size| std::iter::repeat_n(size, self.files_per_size));
        self.train_sizes.iter().copied().chain(tests).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestFile {
    pub size: usize,
    /// Position among the files of the same size.
    pub index: usize,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    /// One training file per entry of `train_sizes`, same order.
    pub train: Vec<Vec<Token>>,
    pub test: Vec<TestFile>,
}

/// Cuts `tokens` into disjoint contiguous files.
///
/// Without `shuffle` the files are laid out in canonical order from the
/// start of the corpus and `seed` is unused. With `shuffle` the order in
/// which the files occupy the corpus is a seeded permutation. Tokens past
/// the total demand are left unused.
pub fn split_corpus(tokens: &[Token], spec: &SplitSpec, seed: u64, shuffle: bool) -> Result<Split> {
    spec.validate()?;
    let needed = spec.demand();
    if tokens.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            available: tokens.len(),
        });
    }
    let lengths = spec.slice_lengths();
    let mut layout: Vec<usize> = (0..lengths.len()).collect();
    if shuffle {
        layout.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }

    let mut slices: Vec<Option<Vec<Token>>> = vec![None; lengths.len()];
    let mut offset = 0;
    for &slot in &layout {
        let len = lengths[slot];
        slices[slot] = Some(tokens[offset..offset + len].to_vec());
        offset += len;
    }
    let mut slices = slices.into_iter().map(|s| s.expect("every slot is filled"));

    let train = slices.by_ref().take(spec.train_sizes.len()).collect();
    let mut test = Vec::with_capacity(lengths.len() - spec.train_sizes.len());
    for &size in &spec.test_file_sizes {
        for index in 0..spec.files_per_size {
            let tokens = slices.next().expect("slice count matches spec");
            test.push(TestFile { size, index, tokens });
        }
    }
    Ok(Split { train, test })
}
