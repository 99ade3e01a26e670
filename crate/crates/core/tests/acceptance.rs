//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqlid::classifier::token_evidence;
use seqlid::estimator::{
    estimate, exact_small_count_interval, normal_interval, refined_interval, zero_probability, EstimatorConfig,
};
use seqlid::harness::{
    evaluate_files, generate_synthetic_corpora, run_experiment_on_tokens, split_corpus, Execution, ExperimentConfig,
    ExperimentReport, LabeledFile, SplitSpec, SyntheticSpec,
};
use seqlid::{
    classify_stream, shape_encode, word_tokenize, Accumulator, ClassifierConfig, Corpora, Decision, EndPolicy,
    GlobalModel, Session, Token, TokenizerMode,
};

const SWEEP: [f64; 5] = [0.0, 5.0, 10.0, 14.0, 22.0];
/// Activation threshold chosen for the desk-scale run.
const TUNED_THRESHOLD: f64 = 14.0;
const MIN_ACCURACY_20: f64 = 0.95;
const MAX_MEAN_CONVERGENCE: f64 = 15.0;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. estimator exactness

/// Extended-precision references (mpmath, 40 digits).
const ZERO_1000: f64 = 5.129_197_890_901_780_8e-5;
const REFINED_LOW: f64 = 8.190_024_875_775_822e-3;
const REFINED_HIGH: f64 = 1.220_997_512_422_417_8e-2;

fn sig6(x: f64) -> String {
    format!("{x:.5e}")
}

fn criterion_1() -> Check {
    let z = zero_probability(1000, 0.95).map_err(|e| e.to_string())?;
    ensure((z - ZERO_1000).abs() <= 1e-12, || {
        format!("zero_probability(1000) = {z:e}")
    })?;

    let r = refined_interval(100, 10000, 2.0).map_err(|e| e.to_string())?;
    ensure(
        (r.low - REFINED_LOW).abs() < 1e-15 && (r.high - REFINED_HIGH).abs() < 1e-15,
        || {
            format!(
                "refined ({:e}, {:e}) differs from the extended-precision oracle",
                r.low, r.high
            )
        },
    )?;
    ensure(r.base == 0.01, || format!("refined base {}", r.base))?;
    // six significant figures against the extended-precision evaluation; the
    // transcribed reference 0.00819003 mis-rounds 0.0081900248758
    let mut notes = Vec::new();
    for (what, got, oracle, stated) in [
        ("low", r.low, REFINED_LOW, 0.008_190_03),
        ("high", r.high, REFINED_HIGH, 0.012_210_00),
    ] {
        ensure(sig6(got) == sig6(oracle), || {
            format!("refined {what} {got:e} vs oracle {oracle:e}")
        })?;
        if sig6(got) != sig6(stated) {
            notes.push(format!("{what} {} (transcribed {})", sig6(got), sig6(stated)));
        }
    }

    let n = normal_interval(5000, 10000, 2.0).map_err(|e| e.to_string())?;
    ensure((n.low, n.base, n.high) == (0.49, 0.5, 0.51), || {
        format!("normal interval {n:?}")
    })?;
    let mut detail = format!(
        "zero={z:.6e} refined=({:.8}, {}, {:.8}) normal=({}, {}, {})",
        r.low, r.base, r.high, n.low, n.base, n.high
    );
    if !notes.is_empty() {
        detail.push_str(&format!("; oracle-derived reference used: {}", notes.join(", ")));
    }
    Ok(detail)
}

// ---------------------------------------------------------------------------
// 2. small-count interval vs brute-force oracle

/// `P(X <= k)` by direct summation of `C(n,j) p^j (1-p)^(n-j)`.
fn oracle_cdf(k: u64, n: u64, p: f64) -> f64 {
    let mut sum = 0.0;
    let mut choose = 1.0_f64;
    for j in 0..=k.min(n) {
        if j > 0 {
            choose *= (n - j + 1) as f64 / j as f64;
        }
        sum += choose * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32);
    }
    sum
}

/// Scans `p` on a grid for the first sign change of `g`, then bisects the
/// bracket.
fn oracle_root(g: impl Fn(f64) -> f64) -> f64 {
    const STEPS: usize = 100_000;
    let mut prev = 0.0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    for i in 1..=STEPS {
        let p = i as f64 / STEPS as f64;
        if g(p) <= 0.0 {
            lo = prev;
            hi = p;
            break;
        }
        prev = p;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_2() -> Check {
    let alpha = 0.05;
    let mut worst: f64 = 0.0;
    for n in [10u64, 50, 200, 1000] {
        for m in 1..=9u64 {
            let t = exact_small_count_interval(m, n, alpha, 10).map_err(|e| e.to_string())?;
            let low = oracle_root(|p| alpha / 2.0 - (1.0 - oracle_cdf(m - 1, n, p)));
            let high = if m == n {
                1.0
            } else {
                oracle_root(|p| oracle_cdf(m, n, p) - alpha / 2.0)
            };
            let err = (t.low - low).abs().max((t.high - high).abs());
            worst = worst.max(err);
            ensure(err <= 1e-6, || {
                format!("(m={m}, n={n}): got ({}, {}), oracle ({low}, {high})", t.low, t.high)
            })?;
        }
    }
    Ok(format!("36 cases, worst deviation {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// 3. ordering fuzz

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut refined_cases = 0;
    let mut worst_residual: f64 = 0.0;
    for i in 0..10_000 {
        let n = 10f64.powf(rng.random_range(0.0..7.0)).round().max(1.0) as u64;
        let m = match i % 3 {
            0 => rng.random_range(0..=n.min(12)),
            1 => (n as f64 * 10f64.powf(rng.random_range(-4.0..0.0))) as u64,
            _ => rng.random_range(0..=n),
        }
        .min(n);
        let config = EstimatorConfig {
            d: rng.random_range(0.25..4.0),
            ..EstimatorConfig::default()
        };
        let t = estimate(m, n, &config).map_err(|e| e.to_string())?;
        ensure(t.is_ordered(), || format!("estimate({m}, {n}, d={}) = {t:?}", config.d))?;
        let refined = m >= config.small_count_cutoff && (m as f64 / n as f64) <= config.large_count_base_cutoff;
        if refined {
            refined_cases += 1;
            let (mf, nf, d) = (m as f64, n as f64, config.d);
            let low_res = (nf * t.low - (mf - d * (nf * t.low).sqrt())).abs();
            let high_res = if t.high < 1.0 {
                (nf * t.high - (mf + d * (nf * t.high).sqrt())).abs()
            } else {
                0.0
            };
            // residual in count units, relative to max(1, m)
            let res = low_res.max(high_res) / mf.max(1.0);
            worst_residual = worst_residual.max(res);
            ensure(res < 1e-9, || format!("refined residual {res:e} at ({m}, {n}, {d})"))?;
        }
    }
    Ok(format!(
        "10000 triples ordered; {refined_cases} refined, worst residual {worst_residual:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// 4. classifier soundness and additivity

fn oracle_increment(model: &GlobalModel, category: usize, token: &str) -> Accumulator {
    let cat = &model.categories[category];
    let prior = *model.priors.get(token).unwrap_or(&model.unseen_prior);
    let (low, base, high) = match cat.token_probs.get(token) {
        Some(t) => (if t.low > 0.0 { t.low } else { cat.zero_prob }, t.base, t.high),
        None => (cat.zero_prob, cat.zero_prob, cat.zero_prob),
    };
    Accumulator {
        low: (low / prior).ln(),
        base: (base / prior).ln(),
        high: (high / prior).ln(),
    }
}

fn criterion_4() -> Check {
    let corpora = generate_synthetic_corpora(&SyntheticSpec {
        n_categories: 6,
        vocab_size: 400,
        tokens_per_category: 1500,
        similarity: 0.6,
        zipf_exponent: 1.0,
        seed: 4,
    })
    .map_err(|e| e.to_string())?;
    let model =
        GlobalModel::train(&corpora, TokenizerMode::Word, &EstimatorConfig::default()).map_err(|e| e.to_string())?;
    let per_category: Vec<&Vec<Token>> = corpora.values().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut decided = 0;
    let mut worst: f64 = 0.0;

    for _ in 0..1000 {
        // mostly one category, with some cross-category and unseen noise
        let source = per_category[rng.random_range(0..per_category.len())];
        let len = rng.random_range(0..60);
        let stream: Vec<String> = (0..len)
            .map(|_| {
                let roll: f64 = rng.random();
                if roll < 0.05 {
                    format!("unseen{}", rng.random_range(0..50))
                } else if roll < 0.2 {
                    let other = per_category[rng.random_range(0..per_category.len())];
                    other[rng.random_range(0..other.len())].to_string()
                } else {
                    source[rng.random_range(0..source.len())].to_string()
                }
            })
            .collect();
        let threshold = rng.random_range(0.0..25.0);
        let policy = if rng.random_bool(0.5) {
            EndPolicy::Best
        } else {
            EndPolicy::CandidateSet
        };
        let config = ClassifierConfig::new(threshold, policy).map_err(|e| e.to_string())?;
        let out = classify_stream(&stream, &model, config).map_err(|e| e.to_string())?;
        let acc = out.session.accumulators();

        for (c, a) in acc.iter().enumerate() {
            ensure(a.low <= a.base && a.base <= a.high, || {
                format!("unordered accumulator {a:?}")
            })?;
            let mut sum = Accumulator::default();
            for t in &stream[..out.tokens_consumed] {
                sum += oracle_increment(&model, c, t);
                debug_assert_eq!(token_evidence(&model, c, t), oracle_increment(&model, c, t));
            }
            let err = (sum.low - a.low)
                .abs()
                .max((sum.base - a.base).abs())
                .max((sum.high - a.high).abs());
            worst = worst.max(err);
            ensure(err <= 1e-12, || format!("accumulator drift {err:e}"))?;
        }

        if let Decision::Decided {
            category,
            tokens_consumed,
        } = out.decision
        {
            decided += 1;
            ensure(tokens_consumed == out.tokens_consumed, || "token count mismatch".into())?;
            let w = acc[category];
            ensure(w.base > threshold, || {
                format!("decided below threshold: {} <= {threshold}", w.base)
            })?;
            let rival = acc
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != category)
                .map(|(_, a)| a.high)
                .fold(f64::NEG_INFINITY, f64::max);
            ensure(w.low > rival, || format!("winner low {} <= rival high {rival}", w.low))?;
            ensure(out.remaining_set() == vec![category], || {
                "decided remaining set is not a singleton".into()
            })?;
        }
    }
    ensure(decided > 100, || {
        format!("only {decided} decided streams; soundness barely exercised")
    })?;
    Ok(format!(
        "1000 streams, {decided} decided, worst accumulator error {worst:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// 5-8. desk-scale reproduction

struct Run6 {
    corpora: Corpora,
    config: ExperimentConfig,
    report: ExperimentReport,
    elapsed: Duration,
}

fn run6() -> Result<Run6, String> {
    let corpora = generate_synthetic_corpora(&SyntheticSpec {
        n_categories: 18,
        vocab_size: 5000,
        tokens_per_category: SplitSpec::default().demand(),
        similarity: 0.5,
        zipf_exponent: 1.0,
        seed: 6,
    })
    .map_err(|e| e.to_string())?;
    let config = ExperimentConfig {
        split: SplitSpec {
            train_sizes: vec![2000],
            ..SplitSpec::default()
        },
        thresholds: SWEEP.to_vec(),
        mode: TokenizerMode::Word,
        execution: Execution::Sequential,
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let report = run_experiment_on_tokens(&corpora, &config).map_err(|e| e.to_string())?;
    Ok(Run6 {
        corpora,
        config,
        report,
        elapsed: start.elapsed(),
    })
}

fn criterion_5(run: &Run6) -> Check {
    let runs = &run.report.runs;
    let mut line = Vec::new();
    for pair in runs.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        for (ca, cb) in a.cells.iter().zip(&b.cells).chain([(&a.all, &b.all)]) {
            ensure(
                cb.counts.definitive_correct + cb.counts.definitive_incorrect
                    <= ca.counts.definitive_correct + ca.counts.definitive_incorrect,
                || {
                    format!(
                        "decisiveness rose from {} to {} between thresholds {} and {} (size {:?})",
                        ca.decisiveness, cb.decisiveness, a.threshold, b.threshold, ca.test_size
                    )
                },
            )?;
        }
    }
    for r in runs {
        line.push(format!("{}:{:.1}%", r.threshold, 100.0 * r.all.decisiveness));
    }
    Ok(format!("decisiveness {}", line.join(" ")))
}

fn criterion_6(run: &Run6) -> Check {
    let r = run.report.run(2000, TUNED_THRESHOLD).ok_or("missing tuned run")?;
    let cell20 = r
        .cells
        .iter()
        .find(|c| c.test_size == Some(20))
        .ok_or("missing 20-token cell")?;
    let conv = r.convergence.all.ok_or("no definitive outcomes")?;
    ensure(cell20.accuracy >= MIN_ACCURACY_20, || {
        format!("20-token accuracy {:.3}", cell20.accuracy)
    })?;
    ensure(conv <= MAX_MEAN_CONVERGENCE, || format!("mean convergence {conv:.2}"))?;
    ensure(run.elapsed < Duration::from_secs(60), || {
        format!("took {:?}", run.elapsed)
    })?;
    Ok(format!(
        "threshold {TUNED_THRESHOLD}: 20-token accuracy {:.1}%, overall accuracy {:.1}%, decisiveness {:.1}%, mean convergence {conv:.2} tokens, {:.2?} single-threaded",
        100.0 * cell20.accuracy,
        100.0 * r.all.accuracy,
        100.0 * r.all.decisiveness,
        run.elapsed
    ))
}

fn labeled_tests(run: &Run6) -> Result<(GlobalModel, Vec<LabeledFile>), String> {
    let mut train = Corpora::new();
    let mut tests = Vec::new();
    for (actual, (id, tokens)) in run.corpora.iter().enumerate() {
        let split =
            split_corpus(tokens, &run.config.split, run.config.seed, run.config.shuffle).map_err(|e| e.to_string())?;
        train.insert(id.clone(), split.train[0].clone());
        tests.extend(split.test.into_iter().map(|file| LabeledFile { actual, file }));
    }
    let model = GlobalModel::train(&train, TokenizerMode::Word, &run.config.estimator).map_err(|e| e.to_string())?;
    Ok((model, tests))
}

fn criterion_7(run: &Run6) -> Check {
    let (model, tests) = labeled_tests(run)?;
    for &threshold in &SWEEP {
        let config = ClassifierConfig::new(threshold, EndPolicy::CandidateSet).map_err(|e| e.to_string())?;
        for f in &tests {
            let mut session = Session::new(&model, config).map_err(|e| e.to_string())?;
            for t in &f.file.tokens {
                if session.step(t.as_str()).is_definitive() {
                    break;
                }
            }
            let set = session.remaining_set();
            ensure(set.contains(&session.leader()), || {
                "remaining set lacks the leader".into()
            })?;
            ensure(set.first() == Some(&session.leader()), || {
                "leader is not ranked first".into()
            })?;
            if session.decision().is_definitive() {
                ensure(set.len() == 1, || format!("decided with {} remaining", set.len()))?;
            }
        }
    }
    for r in &run.report.runs {
        for o in r.outcomes.iter().filter(|o| o.kind.is_definitive()) {
            ensure(o.remaining == 1, || {
                format!("definitive outcome with remaining {}", o.remaining)
            })?;
        }
    }
    let top = run.report.runs.last().ok_or("no runs")?;
    let mean = top.remaining.mean.ok_or("no outcomes")?;
    let n = run.report.categories.len() as f64;
    ensure(mean < n / 2.0, || format!("mean remaining {mean:.2} >= {}", n / 2.0))?;
    Ok(format!(
        "mean remaining at threshold {} is {mean:.2} of {n}",
        top.threshold
    ))
}

fn criterion_8(run: &Run6) -> Check {
    let (model, tests) = labeled_tests(run)?;
    let bytes = model.serialize();
    let back = GlobalModel::deserialize(&bytes).map_err(|e| e.to_string())?;
    ensure(back == model, || "reloaded model differs".into())?;
    ensure(back.serialize() == bytes, || "re-serialized bytes differ".into())?;
    for (i, &threshold) in SWEEP.iter().enumerate() {
        let config = ClassifierConfig::new(threshold, EndPolicy::Best).map_err(|e| e.to_string())?;
        let a = evaluate_files(&model, config, &tests, Execution::Sequential).map_err(|e| e.to_string())?;
        let b = evaluate_files(&back, config, &tests, Execution::Sequential).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("outcomes differ at threshold {threshold}"))?;
        ensure(a == run.report.runs[i].outcomes, || {
            "reconstructed run disagrees with the report".into()
        })?;
        for f in tests.iter().take(200) {
            let x = classify_stream(&f.file.tokens, &model, config).map_err(|e| e.to_string())?;
            let y = classify_stream(&f.file.tokens, &back, config).map_err(|e| e.to_string())?;
            let bits = |s: &[Accumulator]| {
                s.iter()
                    .flat_map(|a| [a.low.to_bits(), a.base.to_bits(), a.high.to_bits()])
                    .collect::<Vec<_>>()
            };
            ensure(bits(x.session.accumulators()) == bits(y.session.accumulators()), || {
                "accumulators differ bitwise".into()
            })?;
        }
    }
    Ok(format!(
        "{} bytes, {} categories, outcomes identical across {} thresholds",
        bytes.len(),
        back.category_count(),
        SWEEP.len()
    ))
}

// ---------------------------------------------------------------------------
// 9. tokenizer contract

fn random_word(rng: &mut ChaCha8Rng) -> String {
    const POOL: &[char] = &[
        'a', 'b', 'g', 'i', 'j', 'k', 'o', 'q', 't', 'y', 'z', 'A', 'Q', 'Z', '0', '7', '.', ',', '!', '-', '\'', '"',
        'é', 'è', 'ñ', 'ç', 'Ç', 'Å', 'ø', 'ß', 'ł', 'Ž', 'š', 'ğ', 'ı', 'İ', 'д', 'Ж', 'λ', 'Ω', '漢', '\u{0301}',
        '¿', '٣', '½', '€',
    ];
    let len = rng.random_range(1..12);
    (0..len).map(|_| POOL[rng.random_range(0..POOL.len())]).collect()
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    const SEPARATORS: &[&str] = &[" ", "  ", "\t", "\n", "\u{00a0}", "\u{2003}", " \r\n"];
    let words: Vec<String> = (0..10_000).map(|_| random_word(&mut rng)).collect();
    let mut text = String::new();
    for w in &words {
        text.push_str(w);
        text.push_str(SEPARATORS[rng.random_range(0..SEPARATORS.len())]);
    }
    let plain = word_tokenize(&text);
    let shapes = shape_encode(&text);
    ensure(plain.len() == words.len(), || {
        format!("{} words, {} tokens", words.len(), plain.len())
    })?;
    ensure(shapes.len() == plain.len(), || {
        "shape and word token counts differ".into()
    })?;
    for ((w, p), s) in words.iter().zip(&plain).zip(&shapes) {
        ensure(w == p.as_str(), || format!("word {w:?} tokenized as {p:?}"))?;
        ensure(s.as_str().chars().count() == w.chars().count(), || {
            format!("length changed: {w:?} -> {s:?}")
        })?;
        ensure(s.as_str().chars().all(|c| "Aaxgi0.".contains(c)), || {
            format!("shape {s:?} leaves the alphabet")
        })?;
    }
    let rejoined = plain.iter().map(Token::as_str).collect::<Vec<_>>().join(" ");
    ensure(word_tokenize(&rejoined) == plain, || {
        "re-tokenization changed the sequence".into()
    })?;
    Ok(format!("{} words: alphabet closed, lengths preserved", words.len()))
}

fn main() {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, result: Check| match result {
        Ok(detail) => println!("[PASS] {id}. {name}: {detail}"),
        Err(why) => {
            failures += 1;
            println!("[FAIL] {id}. {name}: {why}");
        }
    };
    report(1, "estimator exactness", criterion_1());
    report(2, "small-count oracle equivalence", criterion_2());
    report(3, "ordering invariant fuzz", criterion_3());
    report(4, "classifier soundness", criterion_4());
    match run6() {
        Ok(run) => {
            report(5, "decisiveness monotonicity", criterion_5(&run));
            report(6, "desk-scale reproduction", criterion_6(&run));
            report(7, "remaining-set behavior", criterion_7(&run));
            report(8, "model round trip", criterion_8(&run));
        }
        Err(e) => {
            for (id, name) in [
                (5, "decisiveness monotonicity"),
                (6, "desk-scale reproduction"),
                (7, "remaining-set behavior"),
                (8, "model round trip"),
            ] {
                report(id, name, Err(format!("experiment failed: {e}")));
            }
        }
    }
    report(9, "tokenizer contract", criterion_9());
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
