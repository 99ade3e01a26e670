//! Experiment protocol: split each category's corpus into training and test
//! files, train one model per training size, sweep activation thresholds,
//! and score every test file.
//!
//! Test files are classified independently against a shared immutable
//! model. With the `parallel` feature (on by default) that loop runs on the
//! rayon pool; results are always collected in file order, so reports are
//! identical in both modes.

mod metrics;
mod render;
mod split;
pub mod synthetic;

use indexmap::IndexMap;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

pub use metrics::{
    classify_outcome, convergence_stats, remaining_distribution, CellReport, ConfusionMatrix, ConvergenceStats,
    Outcome, OutcomeCounts, OutcomeKind, RemainingCounts, RemainingDistribution,
};
pub use split::{split_corpus, Split, SplitSpec, TestFile};
pub use synthetic::{generate_synthetic_corpora, SyntheticSpec};

use crate::classifier::{classify_stream, ClassifierConfig, EndPolicy};
use crate::error::{invalid, Result};
use crate::estimator::EstimatorConfig;
use crate::model::{Corpora, GlobalModel};
use crate::tokenizer::{Token, TokenizerMode};

/// How test files are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    /// Rayon pool when built with `parallel`, otherwise sequential.
    Parallel,
    Sequential,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub split: SplitSpec,
    pub thresholds: Vec<f64>,
    pub mode: TokenizerMode,
    pub estimator: EstimatorConfig,
    pub end_policy: EndPolicy,
    pub seed: u64,
    pub shuffle: bool,
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            split: SplitSpec::default(),
            thresholds: vec![0.0, 10.0, 14.0],
            mode: TokenizerMode::Shape,
            estimator: EstimatorConfig::default(),
            end_policy: EndPolicy::Best,
            seed: 0,
            shuffle: false,
            execution: Execution::default(),
        }
    }
}

/// Results for one (training size, threshold) pair.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub train_size: usize,
    pub threshold: f64,
    pub cells: Vec<CellReport>,
    pub all: CellReport,
    pub convergence: ConvergenceStats,
    pub remaining: RemainingDistribution,
    pub confusion: ConfusionMatrix,
    #[serde(skip)]
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub mode: TokenizerMode,
    pub categories: Vec<String>,
    pub split: SplitSpec,
    pub runs: Vec<RunReport>,
}

impl ExperimentReport {
    pub fn run(&self, train_size: usize, threshold: f64) -> Option<&RunReport> {
        self.runs
            .iter()
            .find(|r| r.train_size == train_size && r.threshold == threshold)
    }

    /// Plain-text tables: accuracy/decisiveness, convergence, remaining
    /// categories and the confusion matrix.
    pub fn render_text(&self) -> String {
        render::render(self)
    }
}

/// A test file tagged with its true category.
#[derive(Debug, Clone)]
pub struct LabeledFile {
    pub actual: usize,
    pub file: TestFile,
}

/// Tokenizes raw text per category and runs the experiment.
pub fn run_experiment(texts: &IndexMap<String, String>, config: &ExperimentConfig) -> Result<ExperimentReport> {
    let corpora: Corpora = texts
        .iter()
        .map(|(id, text)| (id.clone(), config.mode.tokenize(text)))
        .collect();
    run_experiment_on_tokens(&corpora, config)
}

pub fn run_experiment_on_tokens(corpora: &Corpora, config: &ExperimentConfig) -> Result<ExperimentReport> {
    if corpora.len() < 2 {
        return Err(invalid("experiments need at least 2 categories"));
    }
    if config.thresholds.is_empty() {
        return Err(invalid("at least one threshold is required"));
    }
    for &t in &config.thresholds {
        ClassifierConfig::new(t, config.end_policy)?;
    }
    config.estimator.validate()?;

    let categories: Vec<String> = corpora.keys().cloned().collect();
    let mut training: Vec<Corpora> = vec![Corpora::new(); config.split.train_sizes.len()];
    let mut tests = Vec::new();
    for (actual, (id, tokens)) in corpora.iter().enumerate() {
        let split = split_corpus(tokens, &config.split, config.seed, config.shuffle)
            .map_err(|e| invalid(format!("category `{id}`: {e}")))?;
        for (slot, train) in training.iter_mut().zip(split.train) {
            slot.insert(id.clone(), train);
        }
        tests.extend(split.test.into_iter().map(|file| LabeledFile { actual, file }));
    }

    let mut runs = Vec::new();
    for (&train_size, train) in config.split.train_sizes.iter().zip(&training) {
        let model = GlobalModel::train(train, config.mode, &config.estimator)?;
        for &threshold in &config.thresholds {
            let classifier = ClassifierConfig::new(threshold, config.end_policy)?;
            let outcomes = evaluate_files(&model, classifier, &tests, config.execution)?;
            runs.push(summarize(&categories, &config.split, train_size, threshold, outcomes));
        }
    }
    Ok(ExperimentReport {
        mode: config.mode,
        categories,
        split: config.split.clone(),
        runs,
    })
}

/// Classifies every file against `model`, preserving file order.
pub fn evaluate_files(
    model: &GlobalModel,
    config: ClassifierConfig,
    files: &[LabeledFile],
    execution: Execution,
) -> Result<Vec<Outcome>> {
    let score = |f: &LabeledFile| score_file(model, config, f);
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => files.par_iter().map(score).collect(),
        _ => files.iter().map(score).collect(),
    }
}

fn score_file(model: &GlobalModel, config: ClassifierConfig, labeled: &LabeledFile) -> Result<Outcome> {
    let tokens: &[Token] = &labeled.file.tokens;
    let out = classify_stream(tokens, model, config)?;
    Outcome::new(
        &out.decision,
        labeled.actual,
        out.tokens_consumed,
        out.remaining_set().len(),
        labeled.file.size,
    )
}

fn summarize(
    categories: &[String],
    split: &SplitSpec,
    train_size: usize,
    threshold: f64,
    outcomes: Vec<Outcome>,
) -> RunReport {
    let cells = split
        .test_file_sizes
        .iter()
        .map(|&size| {
            let counts = OutcomeCounts::from_outcomes(outcomes.iter().filter(|o| o.test_size == size));
            CellReport::new(Some(size), counts)
        })
        .collect();
    RunReport {
        train_size,
        threshold,
        cells,
        all: CellReport::new(None, OutcomeCounts::from_outcomes(&outcomes)),
        convergence: convergence_stats(&outcomes),
        remaining: remaining_distribution(&outcomes),
        confusion: ConfusionMatrix::from_outcomes(categories, &outcomes),
        outcomes,
    }
}
