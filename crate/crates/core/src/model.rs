//! Trained models: count tables, per-category probability triples, pooled
//! priors, and the tab-separated model file.
//!
//! File layout (UTF-8, one record per line, fields separated by TAB):
//!
//! ```text
//! SEQLID  version=1  mode=<word|shape>  d=<x>  cutoff=<n>  zero_target=<x>  base_cutoff=<x>
//! PRIOR         <token>  <p>
//! UNSEEN_PRIOR  <p>
//! CATEGORY      <id>     zero=<p>  tokens=<n>
//! T             <token>  <low>  <base>  <high>
//! END
//! ```
//!
//! `PRIOR` and `T` records are sorted by token. Probabilities are written with
//! 17 significant digits so every `f64` survives the round trip unchanged.
//! `base_cutoff` may be omitted on input, in which case the default applies.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimator::{estimate, prior_probability, zero_probability, EstimatorConfig, ProbabilityTriple};
use crate::tokenizer::{Token, TokenizerMode};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "SEQLID";

/// Training text per category, in stable category order.
pub type Corpora = IndexMap<String, Vec<Token>>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CategoryCounts {
    pub tokens: BTreeMap<Token, u64>,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub categories: IndexMap<String, CategoryCounts>,
    pub global: BTreeMap<Token, u64>,
    pub grand_total: u64,
}

impl CountTable {
    /// Per-category and pooled token frequencies.
    pub fn count(corpora: &Corpora) -> Result<Self> {
        if corpora.len() < 2 {
            return Err(invalid(format!(
                "training needs at least 2 categories, got {}",
                corpora.len()
            )));
        }
        let mut categories = IndexMap::with_capacity(corpora.len());
        let mut global: BTreeMap<Token, u64> = BTreeMap::new();
        let mut grand_total = 0;
        for (id, tokens) in corpora {
            validate_category_id(id)?;
            if tokens.is_empty() {
                return Err(invalid(format!("category `{id}` has no training tokens")));
            }
            let mut counts = CategoryCounts::default();
            for token in tokens {
                *counts.tokens.entry(token.clone()).or_insert(0) += 1;
            }
            counts.total = tokens.len() as u64;
            for (token, &c) in &counts.tokens {
                *global.entry(token.clone()).or_insert(0) += c;
            }
            grand_total += counts.total;
            categories.insert(id.clone(), counts);
        }
        Ok(CountTable {
            categories,
            global,
            grand_total,
        })
    }
}

fn validate_category_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(|c| c == '\t' || c == '\n' || c == '\r') {
        return Err(invalid(format!(
            "category id {id:?} must be non-empty and free of tabs and newlines"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryModel {
    pub id: String,
    pub token_probs: BTreeMap<Token, ProbabilityTriple>,
    pub zero_prob: f64,
    pub training_tokens: u64,
}

impl CategoryModel {
    pub fn triple(&self, token: &str) -> ProbabilityTriple {
        self.token_probs
            .get(token)
            .copied()
            .unwrap_or_else(|| ProbabilityTriple::uniform(self.zero_prob))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalModel {
    pub categories: Vec<CategoryModel>,
    pub priors: BTreeMap<Token, f64>,
    pub unseen_prior: f64,
    pub mode: TokenizerMode,
    pub estimator_config: EstimatorConfig,
    pub format_version: u32,
}

impl GlobalModel {
    /// Counts the corpora and turns every count into a probability triple.
    pub fn train(corpora: &Corpora, mode: TokenizerMode, config: &EstimatorConfig) -> Result<Self> {
        config.validate()?;
        let table = CountTable::count(corpora)?;
        Self::from_counts(&table, mode, config)
    }

    pub fn from_counts(table: &CountTable, mode: TokenizerMode, config: &EstimatorConfig) -> Result<Self> {
        config.validate()?;
        let mut categories = Vec::with_capacity(table.categories.len());
        for (id, counts) in &table.categories {
            // the small-count interval is the expensive one and depends only on m for fixed n
            let mut cache: HashMap<u64, ProbabilityTriple> = HashMap::new();
            let mut token_probs = BTreeMap::new();
            for (token, &m) in &counts.tokens {
                let triple = match cache.get(&m) {
                    Some(t) => *t,
                    None => {
                        let t = estimate(m, counts.total, config)?;
                        if m < config.small_count_cutoff {
                            cache.insert(m, t);
                        }
                        t
                    }
                };
                token_probs.insert(token.clone(), triple);
            }
            categories.push(CategoryModel {
                id: id.clone(),
                token_probs,
                zero_prob: zero_probability(counts.total, config.zero_target)?,
                training_tokens: counts.total,
            });
        }
        let priors = table
            .global
            .iter()
            .map(|(token, &m)| Ok((token.clone(), prior_probability(m, table.grand_total, config)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(GlobalModel {
            categories,
            priors,
            unseen_prior: zero_probability(table.grand_total, config.zero_target)?,
            mode,
            estimator_config: *config,
            format_version: FORMAT_VERSION,
        })
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    pub fn category_id(&self, index: usize) -> &str {
        &self.categories[index].id
    }

    pub fn category_index(&self, id: &str) -> Option<usize> {
        self.categories.iter().position(|c| c.id == id)
    }

    pub fn prior(&self, token: &str) -> f64 {
        self.priors.get(token).copied().unwrap_or(self.unseen_prior)
    }

    /// Triple for `token` in `category` (zero-probability fallback) and the
    /// pooled prior (unseen-prior fallback).
    pub fn lookup(&self, category: &str, token: &str) -> Result<(ProbabilityTriple, f64)> {
        let index = self
            .category_index(category)
            .ok_or_else(|| Error::UnknownCategory(category.to_owned()))?;
        Ok(self.lookup_index(index, token))
    }

    pub fn lookup_index(&self, category: usize, token: &str) -> (ProbabilityTriple, f64) {
        (self.categories[category].triple(token), self.prior(token))
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let cfg = &self.estimator_config;
        writeln!(
            out,
            "{MAGIC}\tversion={}\tmode={}\td={}\tcutoff={}\tzero_target={}\tbase_cutoff={}",
            self.format_version, self.mode, cfg.d, cfg.small_count_cutoff, cfg.zero_target, cfg.large_count_base_cutoff
        )?;
        for (token, p) in &self.priors {
            writeln!(out, "PRIOR\t{token}\t{}", fmt_prob(*p))?;
        }
        writeln!(out, "UNSEEN_PRIOR\t{}", fmt_prob(self.unseen_prior))?;
        for category in &self.categories {
            writeln!(
                out,
                "CATEGORY\t{}\tzero={}\ttokens={}",
                category.id,
                fmt_prob(category.zero_prob),
                category.training_tokens
            )?;
            for (token, t) in &category.token_probs {
                writeln!(
                    out,
                    "T\t{token}\t{}\t{}\t{}",
                    fmt_prob(t.low),
                    fmt_prob(t.base),
                    fmt_prob(t.high)
                )?;
            }
        }
        writeln!(out, "END")?;
        Ok(())
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        Parser::default().run(input)
    }
}

fn fmt_prob(p: f64) -> String {
    format!("{p:.16e}")
}

#[derive(Default)]
struct Parser {
    line: usize,
    header: Option<(TokenizerMode, EstimatorConfig)>,
    priors: BTreeMap<Token, f64>,
    unseen_prior: Option<f64>,
    categories: Vec<CategoryModel>,
    ended: bool,
}

impl Parser {
    fn malformed(&self, message: impl Into<String>) -> Error {
        Error::Malformed {
            line: self.line,
            message: message.into(),
        }
    }

    fn run<R: BufRead>(mut self, input: R) -> Result<GlobalModel> {
        for raw in input.lines() {
            let raw = raw?;
            self.line += 1;
            if self.ended {
                return Err(self.malformed("content after END"));
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if self.header.is_none() {
                self.header = Some(self.parse_header(&fields)?);
                continue;
            }
            match fields[0] {
                "PRIOR" => self.parse_prior(&fields)?,
                "UNSEEN_PRIOR" => self.parse_unseen(&fields)?,
                "CATEGORY" => self.parse_category(&fields)?,
                "T" => self.parse_entry(&fields)?,
                "END" if fields.len() == 1 => self.ended = true,
                other => return Err(self.malformed(format!("unexpected record `{other}`"))),
            }
        }
        if !self.ended {
            self.line += 1;
            return Err(self.malformed("unexpected end of input (missing END record)"));
        }
        self.finish()
    }

    fn parse_header(&self, fields: &[&str]) -> Result<(TokenizerMode, EstimatorConfig)> {
        if fields[0] != MAGIC {
            return Err(self.malformed(format!("expected `{MAGIC}` header")));
        }
        let mut kv = fields[1..].iter().map(|f| {
            f.split_once('=')
                .ok_or_else(|| self.malformed(format!("header field `{f}` is not key=value")))
        });
        let mut expect = |key: &str| -> Result<&str> {
            match kv.next() {
                Some(Ok((k, v))) if k == key => Ok(v),
                Some(Ok((k, _))) => Err(self.malformed(format!("expected header key `{key}`, found `{k}`"))),
                Some(Err(e)) => Err(e),
                None => Err(self.malformed(format!("header is missing `{key}`"))),
            }
        };
        let version = expect("version")?;
        if version.parse::<u32>().ok() != Some(FORMAT_VERSION) {
            return Err(Error::Version {
                line: self.line,
                found: version.to_owned(),
                expected: FORMAT_VERSION,
            });
        }
        let mode = expect("mode")?
            .parse::<TokenizerMode>()
            .map_err(|e| self.malformed(e.to_string()))?;
        let mut config = EstimatorConfig {
            d: self.number(expect("d")?)?,
            small_count_cutoff: expect("cutoff")?
                .parse()
                .map_err(|_| self.malformed("cutoff is not an integer"))?,
            zero_target: self.number(expect("zero_target")?)?,
            ..EstimatorConfig::default()
        };
        match kv.next() {
            None => {}
            Some(Ok(("base_cutoff", v))) => config.large_count_base_cutoff = self.number(v)?,
            Some(Ok((k, _))) => return Err(self.malformed(format!("unknown header key `{k}`"))),
            Some(Err(e)) => return Err(e),
        }
        if kv.next().is_some() {
            return Err(self.malformed("trailing header fields"));
        }
        config
            .validate()
            .map_err(|e| self.malformed(format!("bad estimator settings: {e}")))?;
        Ok((mode, config))
    }

    fn number(&self, text: &str) -> Result<f64> {
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.malformed(format!("`{text}` is not a finite number")))
    }

    fn probability(&self, text: &str) -> Result<f64> {
        let p = self.number(text)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(self.malformed(format!("probability {p} outside [0, 1]")));
        }
        Ok(p)
    }

    fn positive_probability(&self, text: &str) -> Result<f64> {
        let p = self.probability(text)?;
        if p <= 0.0 {
            return Err(self.malformed("probability must be strictly positive"));
        }
        Ok(p)
    }

    fn token(&self, text: &str) -> Result<Token> {
        Token::new(text).map_err(|e| self.malformed(e.to_string()))
    }

    fn arity(&self, fields: &[&str], n: usize) -> Result<()> {
        if fields.len() != n {
            return Err(self.malformed(format!(
                "`{}` record needs {} fields, found {}",
                fields[0],
                n,
                fields.len()
            )));
        }
        Ok(())
    }

    fn parse_prior(&mut self, fields: &[&str]) -> Result<()> {
        self.arity(fields, 3)?;
        if self.unseen_prior.is_some() {
            return Err(self.malformed("PRIOR after UNSEEN_PRIOR"));
        }
        let token = self.token(fields[1])?;
        let p = self.positive_probability(fields[2])?;
        if self.priors.insert(token, p).is_some() {
            return Err(Error::Duplicate {
                line: self.line,
                entry: fields[1].to_owned(),
            });
        }
        Ok(())
    }

    fn parse_unseen(&mut self, fields: &[&str]) -> Result<()> {
        self.arity(fields, 2)?;
        if self.unseen_prior.is_some() {
            return Err(Error::Duplicate {
                line: self.line,
                entry: "UNSEEN_PRIOR".to_owned(),
            });
        }
        self.unseen_prior = Some(self.positive_probability(fields[1])?);
        Ok(())
    }

    fn parse_category(&mut self, fields: &[&str]) -> Result<()> {
        self.arity(fields, 4)?;
        if self.unseen_prior.is_none() {
            return Err(self.malformed("CATEGORY before UNSEEN_PRIOR"));
        }
        let id = fields[1];
        validate_category_id(id).map_err(|e| self.malformed(e.to_string()))?;
        if self.categories.iter().any(|c| c.id == id) {
            return Err(Error::Duplicate {
                line: self.line,
                entry: id.to_owned(),
            });
        }
        let zero = fields[2]
            .strip_prefix("zero=")
            .ok_or_else(|| self.malformed("expected zero=<p>"))?;
        let zero_prob = self.positive_probability(zero)?;
        let training_tokens = fields[3]
            .strip_prefix("tokens=")
            .and_then(|v| v.parse::<u64>().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| self.malformed("expected tokens=<positive integer>"))?;
        self.categories.push(CategoryModel {
            id: id.to_owned(),
            token_probs: BTreeMap::new(),
            zero_prob,
            training_tokens,
        });
        Ok(())
    }

    fn parse_entry(&mut self, fields: &[&str]) -> Result<()> {
        self.arity(fields, 5)?;
        let token = self.token(fields[1])?;
        let triple = ProbabilityTriple {
            low: self.probability(fields[2])?,
            base: self.probability(fields[3])?,
            high: self.probability(fields[4])?,
        };
        if !triple.is_ordered() {
            return Err(self.malformed("triple violates low <= base <= high"));
        }
        let line = self.line;
        let category = self.categories.last_mut().ok_or_else(|| Error::Malformed {
            line,
            message: "token entry before any CATEGORY".to_owned(),
        })?;
        if category.token_probs.insert(token, triple).is_some() {
            return Err(Error::Duplicate {
                line,
                entry: fields[1].to_owned(),
            });
        }
        Ok(())
    }

    fn finish(self) -> Result<GlobalModel> {
        let line = self.line;
        let (mode, estimator_config) = self.header.ok_or_else(|| Error::Malformed {
            line,
            message: "missing header".to_owned(),
        })?;
        let unseen_prior = self.unseen_prior.ok_or_else(|| Error::Malformed {
            line,
            message: "missing UNSEEN_PRIOR".to_owned(),
        })?;
        if self.categories.len() < 2 {
            return Err(Error::Malformed {
                line,
                message: format!("model needs at least 2 categories, found {}", self.categories.len()),
            });
        }
        Ok(GlobalModel {
            categories: self.categories,
            priors: self.priors,
            unseen_prior,
            mode,
            estimator_config,
            format_version: FORMAT_VERSION,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::word_tokenize;

    fn corpora(spec: &[(&str, &str)]) -> Corpora {
        spec.iter()
            .map(|(id, text)| (id.to_string(), word_tokenize(text)))
            .collect()
    }

    fn toy() -> Corpora {
        let l1 = format!("{} {}", "a ".repeat(1000), "b ".repeat(100));
        let l2 = format!("{} {}", "c ".repeat(1000), "b ".repeat(100));
        corpora(&[("L1", &l1), ("L2", &l2)])
    }

    #[test]
    fn counts_are_exact() {
        let table = CountTable::count(&corpora(&[("L1", "a a b"), ("L2", "b")])).unwrap();
        let l1 = &table.categories["L1"];
        assert_eq!(l1.tokens["a"], 2);
        assert_eq!(l1.tokens["b"], 1);
        assert_eq!(l1.total, 3);
        assert_eq!(table.categories["L2"].tokens["b"], 1);
        assert_eq!(table.global["b"], 2);
        assert_eq!(table.grand_total, 4);
    }

    #[test]
    fn count_preconditions() {
        assert!(CountTable::count(&corpora(&[("L1", "a b")])).is_err());
        assert!(CountTable::count(&corpora(&[("L1", ""), ("L2", "a")])).is_err());
        assert!(CountTable::count(&corpora(&[("L\t1", "a"), ("L2", "a")])).is_err());
    }

    #[test]
    fn toy_model_values() {
        let model = GlobalModel::train(&toy(), TokenizerMode::Word, &EstimatorConfig::default()).unwrap();
        let (t, prior) = model.lookup("L1", "a").unwrap();
        assert!((t.base - 1000.0 / 1100.0).abs() < 1e-15);
        assert!((prior - 1000.0 / 2200.0).abs() < 1e-15);
        assert!((model.prior("b") - 200.0 / 2200.0).abs() < 1e-15);

        let (t, prior) = model.lookup("L2", "a").unwrap();
        assert_eq!(t, ProbabilityTriple::uniform(model.categories[1].zero_prob));
        assert_eq!(prior, model.priors["a"]);

        let (t, prior) = model.lookup("L1", "zzz").unwrap();
        assert_eq!(t, ProbabilityTriple::uniform(model.categories[0].zero_prob));
        assert_eq!(prior, model.unseen_prior);

        assert!(matches!(model.lookup("L3", "a"), Err(Error::UnknownCategory(_))));
    }

    #[test]
    fn training_order_does_not_matter() {
        let cfg = EstimatorConfig::default();
        let a = GlobalModel::train(
            &corpora(&[("L1", "x y x z"), ("L2", "y y q")]),
            TokenizerMode::Word,
            &cfg,
        )
        .unwrap();
        let b = GlobalModel::train(
            &corpora(&[("L1", "z x x y"), ("L2", "q y y")]),
            TokenizerMode::Word,
            &cfg,
        )
        .unwrap();
        assert_eq!(a.serialize(), b.serialize());
        assert_eq!(a, b);
    }

    #[test]
    fn round_trip() {
        let model = GlobalModel::train(&toy(), TokenizerMode::Shape, &EstimatorConfig::default()).unwrap();
        let bytes = model.serialize();
        let back = GlobalModel::deserialize(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.serialize(), bytes);
    }

    #[test]
    fn header_without_base_cutoff_uses_default() {
        let text = "SEQLID\tversion=1\tmode=word\td=2\tcutoff=10\tzero_target=0.95\n\
                    UNSEEN_PRIOR\t1e-3\nCATEGORY\tA\tzero=1e-2\ttokens=5\nCATEGORY\tB\tzero=1e-2\ttokens=5\nEND\n";
        let model = GlobalModel::deserialize(text.as_bytes()).unwrap();
        assert_eq!(model.estimator_config, EstimatorConfig::default());
    }

    #[test]
    fn truncated_file_names_line() {
        let model = GlobalModel::train(&toy(), TokenizerMode::Word, &EstimatorConfig::default()).unwrap();
        let text = String::from_utf8(model.serialize()).unwrap();
        let lines: Vec<&str> = text.lines().collect();

        // cut at a line boundary
        let cut = lines[..4].join("\n") + "\n";
        match GlobalModel::deserialize(cut.as_bytes()) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected malformed error, got {other:?}"),
        }

        // cut mid-record
        let last = lines[5];
        let cut = lines[..5].join("\n") + "\n" + &last[..last.len() - 30];
        match GlobalModel::deserialize(cut.as_bytes()) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_version_is_rejected() {
        let model = GlobalModel::train(&toy(), TokenizerMode::Word, &EstimatorConfig::default()).unwrap();
        let text = String::from_utf8(model.serialize())
            .unwrap()
            .replace("version=1", "version=7");
        assert!(matches!(
            GlobalModel::deserialize(text.as_bytes()),
            Err(Error::Version { line: 1, .. })
        ));
    }

    #[test]
    fn duplicate_token_is_rejected() {
        let text = "SEQLID\tversion=1\tmode=word\td=2\tcutoff=10\tzero_target=0.95\n\
                    UNSEEN_PRIOR\t1e-3\nCATEGORY\tA\tzero=1e-2\ttokens=5\n\
                    T\tx\t0.1\t0.2\t0.3\nT\tx\t0.1\t0.2\t0.3\n";
        match GlobalModel::deserialize(text.as_bytes()) {
            Err(Error::Duplicate { line, entry }) => {
                assert_eq!(line, 5);
                assert_eq!(entry, "x");
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn misordered_triple_is_rejected() {
        let text = "SEQLID\tversion=1\tmode=word\td=2\tcutoff=10\tzero_target=0.95\n\
                    UNSEEN_PRIOR\t1e-3\nCATEGORY\tA\tzero=1e-2\ttokens=5\n\
                    T\tx\t0.3\t0.2\t0.1\n";
        assert!(matches!(
            GlobalModel::deserialize(text.as_bytes()),
            Err(Error::Malformed { line: 4, .. })
        ));
    }
}
