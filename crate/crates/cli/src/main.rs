//! `seqlid` command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data or model errors.

mod config;

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use indexmap::IndexMap;
use seqlid::harness::{
    generate_synthetic_corpora, run_experiment, split_corpus, Execution, ExperimentConfig, SplitSpec, SyntheticSpec,
};
use seqlid::{ClassifierConfig, Corpora, Decision, EndPolicy, GlobalModel, Session, TokenizerMode, FORMAT_VERSION};

use config::{CliConfig, ReportFormat};

#[derive(Parser)]
#[command(name = "seqlid", about = "Sequential text classification with early stopping")]
struct Cli {
    /// Defaults file with `key=value` lines
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a directory with one text file per category
    Train {
        #[arg(long, value_name = "DIR")]
        corpus_dir: PathBuf,
        #[arg(long)]
        mode: Option<TokenizerMode>,
        /// Model path; stdout when omitted
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },

    /// Classify text from a file or stdin
    Classify {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_name = "best|set")]
        end_policy: Option<EndPolicy>,
        /// Print per-token accumulators for every category
        #[arg(long)]
        trace: bool,
        input: Option<PathBuf>,
    },

    /// Split corpora, train, and score held-out files over a threshold sweep
    Eval {
        #[arg(long, value_name = "DIR")]
        corpus_dir: PathBuf,
        #[arg(long)]
        mode: Option<TokenizerMode>,
        #[arg(long, value_delimiter = ',', value_name = "CSV")]
        thresholds: Vec<f64>,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, value_name = "best|set")]
        end_policy: Option<EndPolicy>,
        #[arg(long, value_enum)]
        report: Option<ReportFormat>,
        /// Score test files on the calling thread only
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },

    /// Print one token per line
    Tokenize {
        #[arg(long)]
        mode: Option<TokenizerMode>,
        input: Option<PathBuf>,
    },

    /// Write the training and test files an evaluation would use
    Split {
        #[arg(long, value_name = "DIR")]
        corpus_dir: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        #[arg(long)]
        mode: Option<TokenizerMode>,
        #[command(flatten)]
        split: SplitArgs,
    },

    /// Generate Zipf-distributed synthetic corpora, one file per category
    Synth {
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 18)]
        categories: usize,
        #[arg(long, default_value_t = 5000)]
        vocab: usize,
        #[arg(long, default_value_t = 3100)]
        tokens: usize,
        /// Chance that a vocabulary rank is shared rather than private
        #[arg(long, default_value_t = 0.5)]
        similarity: f64,
        #[arg(long, default_value_t = 1.0)]
        zipf: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct EstimatorArgs {
    /// Interval width in standard deviations
    #[arg(long)]
    d: Option<f64>,
    /// Counts below this use the exact binomial interval
    #[arg(long)]
    small_count_cutoff: Option<u64>,
    #[arg(long)]
    zero_target: Option<f64>,
    #[arg(long)]
    base_cutoff: Option<f64>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long, value_delimiter = ',', value_name = "CSV")]
    train_sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_name = "CSV")]
    test_sizes: Vec<usize>,
    #[arg(long, value_name = "N")]
    files_per_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shuffle slice order before cutting files
    #[arg(long)]
    shuffle: bool,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<seqlid::Error> for Failure {
    fn from(e: seqlid::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn at(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", path.display()))
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

impl EstimatorArgs {
    fn apply(&self, base: &CliConfig) -> Result<seqlid::EstimatorConfig, Failure> {
        let mut cfg = base.estimator;
        cfg.d = self.d.unwrap_or(cfg.d);
        cfg.small_count_cutoff = self.small_count_cutoff.unwrap_or(cfg.small_count_cutoff);
        cfg.zero_target = self.zero_target.unwrap_or(cfg.zero_target);
        cfg.large_count_base_cutoff = self.base_cutoff.unwrap_or(cfg.large_count_base_cutoff);
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

impl SplitArgs {
    fn spec(&self) -> Result<SplitSpec, Failure> {
        let defaults = SplitSpec::default();
        let pick = |v: &Vec<usize>, d: Vec<usize>| if v.is_empty() { d } else { v.clone() };
        let spec = SplitSpec {
            train_sizes: pick(&self.train_sizes, defaults.train_sizes),
            test_file_sizes: pick(&self.test_sizes, defaults.test_file_sizes),
            files_per_size: self.files_per_size.unwrap_or(defaults.files_per_size),
        };
        spec.validate().map_err(usage)?;
        Ok(spec)
    }
}

fn version() -> String {
    format!("{} (model format version {FORMAT_VERSION})", env!("CARGO_PKG_VERSION"))
}

fn main() -> ExitCode {
    let matches = match Cli::command().version(version()).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(cli, &mut out).and_then(|()| out.flush().map_err(Failure::from));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli, out: &mut impl Write) -> Result<(), Failure> {
    let defaults = match &cli.config {
        Some(path) => CliConfig::load(path).map_err(Failure::Usage)?,
        None => CliConfig::default(),
    };

    match cli.command {
        Command::Train {
            corpus_dir,
            mode,
            out: path,
            estimator,
        } => {
            let mode = mode.unwrap_or(defaults.mode);
            let estimator = estimator.apply(&defaults)?;
            let corpora: Corpora = read_corpus_dir(&corpus_dir)?
                .iter()
                .map(|(id, text)| (id.clone(), mode.tokenize(text)))
                .collect();
            let model = GlobalModel::train(&corpora, mode, &estimator)?;
            match path {
                Some(path) => {
                    let mut file = BufWriter::new(File::create(&path).map_err(at(&path))?);
                    model.write_to(&mut file)?;
                    file.flush().map_err(at(&path))?;
                    eprintln!(
                        "wrote {} ({} categories, {} tokens)",
                        path.display(),
                        model.category_count(),
                        mode
                    );
                }
                None => model.write_to(&mut *out)?,
            }
        }

        Command::Classify {
            model,
            threshold,
            end_policy,
            trace,
            input,
        } => {
            let config = ClassifierConfig::new(
                threshold.unwrap_or(defaults.threshold),
                end_policy.unwrap_or(defaults.end_policy),
            )
            .map_err(usage)?;
            let file = File::open(&model).map_err(at(&model))?;
            let model = GlobalModel::read_from(BufReader::new(file))
                .map_err(|e| Failure::Data(format!("{}: {e}", model.display())))?;
            let reader: Box<dyn BufRead> = match &input {
                Some(path) => Box::new(BufReader::new(File::open(path).map_err(at(path))?)),
                None => Box::new(io::stdin().lock()),
            };
            classify(&model, config, reader, trace, out)?;
        }

        Command::Eval {
            corpus_dir,
            mode,
            thresholds,
            split,
            end_policy,
            report,
            sequential,
            estimator,
        } => {
            let end_policy = end_policy.unwrap_or(defaults.end_policy);
            let thresholds = if thresholds.is_empty() {
                ExperimentConfig::default().thresholds
            } else {
                thresholds
            };
            for &t in &thresholds {
                ClassifierConfig::new(t, end_policy).map_err(usage)?;
            }
            let config = ExperimentConfig {
                split: split.spec()?,
                thresholds,
                mode: mode.unwrap_or(defaults.mode),
                estimator: estimator.apply(&defaults)?,
                end_policy,
                seed: split.seed,
                shuffle: split.shuffle,
                execution: if sequential {
                    Execution::Sequential
                } else {
                    Execution::default()
                },
            };
            let format = report.unwrap_or(defaults.report);
            let texts = read_corpus_dir(&corpus_dir)?;
            let result = run_experiment(&texts, &config)?;
            match format {
                ReportFormat::Text => write!(out, "{}", result.render_text())?,
                ReportFormat::Json => {
                    serde_json::to_writer_pretty(&mut *out, &result).map_err(|e| Failure::Data(e.to_string()))?;
                    writeln!(out)?;
                }
            }
        }

        Command::Tokenize { mode, input } => {
            let text = match &input {
                Some(path) => fs::read_to_string(path).map_err(at(path))?,
                None => {
                    let mut text = String::new();
                    io::stdin().read_to_string(&mut text)?;
                    text
                }
            };
            for token in mode.unwrap_or(defaults.mode).tokenize(&text) {
                writeln!(out, "{token}")?;
            }
        }

        Command::Split {
            corpus_dir,
            out_dir,
            mode,
            split,
        } => {
            let spec = split.spec()?;
            let mode = mode.unwrap_or(defaults.mode);
            let texts = read_corpus_dir(&corpus_dir)?;
            let mut written = 0;
            for (id, text) in &texts {
                let parts = split_corpus(&mode.tokenize(text), &spec, split.seed, split.shuffle)
                    .map_err(|e| Failure::Data(format!("category `{id}`: {e}")))?;
                let dir = out_dir.join(id);
                fs::create_dir_all(&dir).map_err(at(&dir))?;
                for (size, tokens) in spec.train_sizes.iter().zip(&parts.train) {
                    write_tokens(&dir.join(format!("train-{size}.txt")), tokens)?;
                    written += 1;
                }
                for file in &parts.test {
                    write_tokens(
                        &dir.join(format!("test-{}-{:03}.txt", file.size, file.index)),
                        &file.tokens,
                    )?;
                    written += 1;
                }
            }
            eprintln!(
                "wrote {written} files for {} categories to {}",
                texts.len(),
                out_dir.display()
            );
        }

        Command::Synth {
            out_dir,
            categories,
            vocab,
            tokens,
            similarity,
            zipf,
            seed,
        } => {
            let spec = SyntheticSpec {
                n_categories: categories,
                vocab_size: vocab,
                tokens_per_category: tokens,
                similarity,
                zipf_exponent: zipf,
                seed,
            };
            spec.validate().map_err(usage)?;
            let corpora = generate_synthetic_corpora(&spec)?;
            fs::create_dir_all(&out_dir).map_err(at(&out_dir))?;
            for (id, tokens) in &corpora {
                write_tokens(&out_dir.join(format!("{id}.txt")), tokens)?;
            }
            eprintln!("wrote {} categories to {}", corpora.len(), out_dir.display());
        }
    }
    Ok(())
}

/// Feeds input line by line and stops reading once a decision is made.
fn classify(
    model: &GlobalModel,
    config: ClassifierConfig,
    reader: impl BufRead,
    trace: bool,
    out: &mut impl Write,
) -> Result<(), Failure> {
    let mut session = Session::new(model, config)?;
    'input: for line in reader.lines() {
        let line = line.map_err(|e| Failure::Data(format!("reading input: {e}")))?;
        for token in model.mode.tokenize(&line) {
            let decision = session.step(token.as_str());
            if trace {
                for (c, acc) in session.accumulators().iter().enumerate() {
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
                        session.tokens_seen(),
                        token,
                        model.category_id(c),
                        acc.low,
                        acc.base,
                        acc.high
                    )?;
                }
            }
            if decision.is_final() {
                break 'input;
            }
        }
    }
    match session.finish() {
        Decision::Decided {
            category,
            tokens_consumed,
        } => writeln!(out, "DECIDED {} {tokens_consumed}", model.category_id(category))?,
        Decision::ExhaustedBest { category } => writeln!(out, "EXHAUSTED {}", model.category_id(category))?,
        Decision::ExhaustedSet { categories } => {
            let ids: Vec<&str> = categories.iter().map(|&c| model.category_id(c)).collect();
            writeln!(out, "EXHAUSTED {}", ids.join(" "))?
        }
        Decision::Continue => unreachable!("finish always resolves"),
    }
    Ok(())
}

/// One category per regular file, keyed by file stem, in name order.
/// Hidden files are skipped.
fn read_corpus_dir(dir: &Path) -> Result<IndexMap<String, String>, Failure> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(at(dir))? {
        let path = entry.map_err(at(dir))?.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Data(format!("{}: no category files", dir.display())));
    }

    let mut texts = IndexMap::new();
    for path in paths {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Failure::Data(format!("{}: file name is not valid UTF-8", path.display())))?
            .to_owned();
        let text = fs::read_to_string(&path).map_err(at(&path))?;
        if texts.insert(id.clone(), text).is_some() {
            return Err(Failure::Data(format!(
                "{}: category `{id}` appears twice",
                dir.display()
            )));
        }
    }
    Ok(texts)
}

fn write_tokens(path: &Path, tokens: &[seqlid::Token]) -> Result<(), Failure> {
    let mut file = BufWriter::new(File::create(path).map_err(at(path))?);
    for line in tokens.chunks(20) {
        let words: Vec<&str> = line.iter().map(|t| t.as_str()).collect();
        writeln!(file, "{}", words.join(" ")).map_err(at(path))?;
    }
    file.flush().map_err(at(path))
}
