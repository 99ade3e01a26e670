//! Sequential classification with early stopping.
//!
//! A [`Session`] holds one `(low, base, high)` accumulator per category. Each
//! token adds `ln(p(t|l) / p(t))` for the three estimates of `p(t|l)`. After
//! every token the leader (highest base evidence, ties to the earlier
//! category) is checked twice: its base evidence must exceed the activation
//! threshold, and its low evidence must exceed the high evidence of every
//! other category. When both hold the session is decided and stops
//! consuming tokens.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimator::ProbabilityTriple;
use crate::model::GlobalModel;

/// What to report when the input runs out without a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EndPolicy {
    /// The category with the highest base evidence.
    #[default]
    Best,
    /// Every category not yet excluded by the leader's low evidence.
    CandidateSet,
}

impl FromStr for EndPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best" => Ok(EndPolicy::Best),
            "set" | "candidate_set" => Ok(EndPolicy::CandidateSet),
            other => Err(invalid(format!(
                "unknown end policy `{other}` (expected `best` or `set`)"
            ))),
        }
    }
}

impl fmt::Display for EndPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EndPolicy::Best => "best",
            EndPolicy::CandidateSet => "set",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub activation_threshold: f64,
    pub end_policy: EndPolicy,
}

impl ClassifierConfig {
    pub fn new(activation_threshold: f64, end_policy: EndPolicy) -> Result<Self> {
        let config = ClassifierConfig {
            activation_threshold,
            end_policy,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.activation_threshold.is_finite() && self.activation_threshold >= 0.0) {
            return Err(invalid(format!(
                "activation threshold must be finite and >= 0, got {}",
                self.activation_threshold
            )));
        }
        Ok(())
    }
}

/// Log-evidence bounds for one category.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Accumulator {
    pub low: f64,
    pub base: f64,
    pub high: f64,
}

impl std::ops::AddAssign for Accumulator {
    fn add_assign(&mut self, rhs: Self) {
        self.low += rhs.low;
        self.base += rhs.base;
        self.high += rhs.high;
    }
}

/// Categories are indices into [`GlobalModel::categories`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Decision {
    Continue,
    Decided { category: usize, tokens_consumed: usize },
    ExhaustedBest { category: usize },
    ExhaustedSet { categories: Vec<usize> },
}

impl Decision {
    pub fn is_definitive(&self) -> bool {
        matches!(self, Decision::Decided { .. })
    }

    /// The decided category, or the highest-ranked one after exhaustion.
    pub fn top_category(&self) -> Option<usize> {
        match self {
            Decision::Continue => None,
            Decision::Decided { category, .. } | Decision::ExhaustedBest { category } => Some(*category),
            Decision::ExhaustedSet { categories } => categories.first().copied(),
        }
    }

    pub fn is_final(&self) -> bool {
        !matches!(self, Decision::Continue)
    }
}

/// Evidence one token contributes to one category.
///
/// A zero low estimate is floored at the category's zero probability so the
/// logarithm stays finite.
pub fn token_evidence(model: &GlobalModel, category: usize, token: &str) -> Accumulator {
    let (triple, prior) = model.lookup_index(category, token);
    evidence(model, category, triple, prior)
}

fn evidence(model: &GlobalModel, category: usize, triple: ProbabilityTriple, prior: f64) -> Accumulator {
    let low = if triple.low > 0.0 {
        triple.low
    } else {
        model.categories[category].zero_prob
    };
    Accumulator {
        low: (low / prior).ln(),
        base: (triple.base / prior).ln(),
        high: (triple.high / prior).ln(),
    }
}

/// Accumulator state for one input stream over a shared model.
#[derive(Debug, Clone)]
pub struct Session<'m> {
    model: &'m GlobalModel,
    config: ClassifierConfig,
    accumulators: Vec<Accumulator>,
    tokens_seen: usize,
    decision: Decision,
}

impl<'m> Session<'m> {
    pub fn new(model: &'m GlobalModel, config: ClassifierConfig) -> Result<Self> {
        if model.category_count() < 2 {
            return Err(invalid("classification needs at least 2 categories"));
        }
        config.validate()?;
        Ok(Session {
            model,
            config,
            accumulators: vec![Accumulator::default(); model.category_count()],
            tokens_seen: 0,
            decision: Decision::Continue,
        })
    }

    pub fn model(&self) -> &'m GlobalModel {
        self.model
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn accumulators(&self) -> &[Accumulator] {
        &self.accumulators
    }

    pub fn tokens_seen(&self) -> usize {
        self.tokens_seen
    }

    pub fn decision(&self) -> &Decision {
        &self.decision
    }

    /// Adds one token's evidence and applies both tests.
    ///
    /// Once the session has reached a final decision further tokens are
    /// ignored and that decision is returned unchanged.
    pub fn step(&mut self, token: &str) -> Decision {
        if self.decision.is_final() {
            return self.decision.clone();
        }
        let prior = self.model.prior(token);
        for (category, acc) in self.accumulators.iter_mut().enumerate() {
            let triple = self.model.categories[category].triple(token);
            *acc += evidence(self.model, category, triple, prior);
        }
        self.tokens_seen += 1;

        let leader = self.leader();
        let lead = self.accumulators[leader];
        if lead.base > self.config.activation_threshold && lead.low > self.best_rival_high(leader) {
            self.decision = Decision::Decided {
                category: leader,
                tokens_consumed: self.tokens_seen,
            };
        }
        self.decision.clone()
    }

    /// Resolves an undecided session according to the end policy.
    pub fn finish(&mut self) -> Decision {
        if self.decision.is_final() {
            return self.decision.clone();
        }
        self.decision = match self.config.end_policy {
            EndPolicy::Best => Decision::ExhaustedBest {
                category: self.leader(),
            },
            EndPolicy::CandidateSet => Decision::ExhaustedSet {
                categories: self.remaining_set(),
            },
        };
        self.decision.clone()
    }

    /// Highest base evidence; ties go to the earlier category.
    pub fn leader(&self) -> usize {
        let mut best = 0;
        for (i, acc) in self.accumulators.iter().enumerate().skip(1) {
            if acc.base > self.accumulators[best].base {
                best = i;
            }
        }
        best
    }

    fn best_rival_high(&self, leader: usize) -> f64 {
        self.accumulators
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != leader)
            .map(|(_, acc)| acc.high)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The leader plus every category whose high evidence reaches the
    /// leader's low evidence, ranked by base evidence (stable on ties).
    pub fn remaining_set(&self) -> Vec<usize> {
        let leader = self.leader();
        let floor = self.accumulators[leader].low;
        let mut set: Vec<usize> = (0..self.accumulators.len())
            .filter(|&i| i == leader || self.accumulators[i].high >= floor)
            .collect();
        set.sort_by(|&a, &b| {
            self.accumulators[b]
                .base
                .total_cmp(&self.accumulators[a].base)
                .then(a.cmp(&b))
        });
        set
    }
}

/// Final state of a classified stream.
#[derive(Debug, Clone)]
pub struct StreamOutcome<'m> {
    pub decision: Decision,
    /// Tokens read before stopping: the deciding position, or the whole
    /// stream when no decision was reached.
    pub tokens_consumed: usize,
    pub session: Session<'m>,
}

impl StreamOutcome<'_> {
    pub fn remaining_set(&self) -> Vec<usize> {
        self.session.remaining_set()
    }
}

/// Runs a session over `tokens` until decided or exhausted.
pub fn classify_stream<'m, I, T>(
    tokens: I,
    model: &'m GlobalModel,
    config: ClassifierConfig,
) -> Result<StreamOutcome<'m>>
where
    I: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    let mut session = Session::new(model, config)?;
    for token in tokens {
        if session.step(token.as_ref()).is_definitive() {
            break;
        }
    }
    let decision = session.finish();
    Ok(StreamOutcome {
        decision,
        tokens_consumed: session.tokens_seen(),
        session,
    })
}
