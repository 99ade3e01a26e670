use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::Decision;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    DefinitiveCorrect,
    NodecisionCorrect,
    NodecisionIncorrect,
    DefinitiveIncorrect,
}

impl OutcomeKind {
    pub fn is_correct(self) -> bool {
        matches!(self, OutcomeKind::DefinitiveCorrect | OutcomeKind::NodecisionCorrect)
    }

    pub fn is_definitive(self) -> bool {
        matches!(self, OutcomeKind::DefinitiveCorrect | OutcomeKind::DefinitiveIncorrect)
    }
}

/// Outcome category of a final decision. Non-decisions are judged on the
/// top-ranked category.
pub fn classify_outcome(decision: &Decision, actual: usize) -> Result<OutcomeKind> {
    let predicted = decision
        .top_category()
        .ok_or_else(|| invalid("cannot score a stream that is still undecided"))?;
    Ok(match (decision.is_definitive(), predicted == actual) {
        (true, true) => OutcomeKind::DefinitiveCorrect,
        (true, false) => OutcomeKind::DefinitiveIncorrect,
        (false, true) => OutcomeKind::NodecisionCorrect,
        (false, false) => OutcomeKind::NodecisionIncorrect,
    })
}

/// One classified test file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub predicted: usize,
    pub actual: usize,
    pub tokens_consumed: usize,
    /// Size of the remaining set when the stream stopped.
    pub remaining: usize,
    pub test_size: usize,
}

impl Outcome {
    pub fn new(
        decision: &Decision,
        actual: usize,
        tokens_consumed: usize,
        remaining: usize,
        test_size: usize,
    ) -> Result<Self> {
        Ok(Outcome {
            kind: classify_outcome(decision, actual)?,
            predicted: decision.top_category().expect("checked by classify_outcome"),
            actual,
            tokens_consumed,
            remaining,
            test_size,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub definitive_correct: usize,
    pub nodecision_correct: usize,
    pub nodecision_incorrect: usize,
    pub definitive_incorrect: usize,
}

impl OutcomeCounts {
    pub fn from_outcomes<'a>(outcomes: impl IntoIterator<Item = &'a Outcome>) -> Self {
        let mut counts = OutcomeCounts::default();
        for o in outcomes {
            counts.add(o.kind);
        }
        counts
    }

    pub fn add(&mut self, kind: OutcomeKind) {
        match kind {
            OutcomeKind::DefinitiveCorrect => self.definitive_correct += 1,
            OutcomeKind::NodecisionCorrect => self.nodecision_correct += 1,
            OutcomeKind::NodecisionIncorrect => self.nodecision_incorrect += 1,
            OutcomeKind::DefinitiveIncorrect => self.definitive_incorrect += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.definitive_correct + self.nodecision_correct + self.nodecision_incorrect + self.definitive_incorrect
    }

    /// Share of tests whose decided or top category is right.
    pub fn accuracy(&self) -> f64 {
        ratio(self.definitive_correct + self.nodecision_correct, self.total())
    }

    /// Share of tests that ended in a definitive decision.
    pub fn decisiveness(&self) -> f64 {
        ratio(self.definitive_correct + self.definitive_incorrect, self.total())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy and decisiveness for one group of test files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    /// Test file size, or `None` for the pooled cell.
    pub test_size: Option<usize>,
    pub counts: OutcomeCounts,
    pub accuracy: f64,
    pub decisiveness: f64,
}

impl CellReport {
    pub fn new(test_size: Option<usize>, counts: OutcomeCounts) -> Self {
        CellReport {
            test_size,
            counts,
            accuracy: counts.accuracy(),
            decisiveness: counts.decisiveness(),
        }
    }
}

/// Mean tokens read before a definitive decision. Empty groups are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStats {
    pub correct: Option<f64>,
    pub incorrect: Option<f64>,
    pub all: Option<f64>,
    pub max: Option<usize>,
}

fn mean(values: &[usize]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<usize>() as f64 / values.len() as f64)
    }
}

pub fn convergence_stats(outcomes: &[Outcome]) -> ConvergenceStats {
    let pick = |want: fn(OutcomeKind) -> bool| -> Vec<usize> {
        outcomes
            .iter()
            .filter(|o| want(o.kind))
            .map(|o| o.tokens_consumed)
            .collect()
    };
    let correct = pick(|k| k == OutcomeKind::DefinitiveCorrect);
    let incorrect = pick(|k| k == OutcomeKind::DefinitiveIncorrect);
    let all = pick(OutcomeKind::is_definitive);
    ConvergenceStats {
        correct: mean(&correct),
        incorrect: mean(&incorrect),
        all: mean(&all),
        max: all.iter().copied().max(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemainingCounts {
    pub correct: usize,
    pub incorrect: usize,
    pub all: usize,
}

/// How many categories were still possible when each test stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainingDistribution {
    pub histogram: BTreeMap<usize, RemainingCounts>,
    pub mean: Option<f64>,
}

pub fn remaining_distribution(outcomes: &[Outcome]) -> RemainingDistribution {
    let mut histogram: BTreeMap<usize, RemainingCounts> = BTreeMap::new();
    for o in outcomes {
        // a definitive decision excludes every rival
        let size = if o.kind.is_definitive() { 1 } else { o.remaining };
        let entry = histogram.entry(size).or_default();
        if o.kind.is_correct() {
            entry.correct += 1;
        } else {
            entry.incorrect += 1;
        }
        entry.all += 1;
    }
    let total: usize = histogram.values().map(|c| c.all).sum();
    let mean = (total > 0).then(|| histogram.iter().map(|(&k, c)| k * c.all).sum::<usize>() as f64 / total as f64);
    RemainingDistribution { histogram, mean }
}

/// `counts[actual][predicted]`, with non-decisions attributed to the top
/// category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub categories: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_outcomes(categories: &[String], outcomes: &[Outcome]) -> Self {
        let n = categories.len();
        let mut counts = vec![vec![0; n]; n];
        for o in outcomes {
            counts[o.actual][o.predicted] += 1;
        }
        ConfusionMatrix {
            categories: categories.to_vec(),
            counts,
        }
    }

    pub fn row_total(&self, actual: usize) -> usize {
        self.counts[actual].iter().sum()
    }
}
