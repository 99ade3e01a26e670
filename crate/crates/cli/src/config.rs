//! Optional `key=value` defaults file. Flags given on the command line
//! always win over values read here.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use seqlid::{ClassifierConfig, EndPolicy, EstimatorConfig, TokenizerMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub mode: TokenizerMode,
    pub estimator: EstimatorConfig,
    pub threshold: f64,
    pub end_policy: EndPolicy,
    pub report: ReportFormat,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            mode: TokenizerMode::Shape,
            estimator: EstimatorConfig::default(),
            threshold: 14.0,
            end_policy: EndPolicy::Best,
            report: ReportFormat::Text,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| format!("`{key}`: {e}"))
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut config = CliConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let at = |e: String| format!("line {}: {e}", i + 1);
            match key {
                "mode" => config.mode = parse(key, value).map_err(at)?,
                "d" => config.estimator.d = parse(key, value).map_err(at)?,
                "small_count_cutoff" => config.estimator.small_count_cutoff = parse(key, value).map_err(at)?,
                "zero_target" => config.estimator.zero_target = parse(key, value).map_err(at)?,
                "base_cutoff" => config.estimator.large_count_base_cutoff = parse(key, value).map_err(at)?,
                "threshold" => config.threshold = parse(key, value).map_err(at)?,
                "end_policy" => config.end_policy = parse(key, value).map_err(at)?,
                "report" => {
                    config.report = ReportFormat::from_str(value, true).map_err(|e| at(format!("`report`: {e}")))?
                }
                _ => return Err(at(format!("unknown key `{key}`"))),
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.estimator.validate().map_err(|e| e.to_string())?;
        ClassifierConfig::new(self.threshold, self.end_policy).map_err(|e| e.to_string())?;
        Ok(())
    }
}
