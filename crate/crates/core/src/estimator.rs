//! Probability triples from binomial token counts.
//!
//! A token seen `m` times among `n` training tokens of a category gets a
//! `(low, base, high)` triple. Which formula is used depends on the count:
//!
//! - `m = 0`: the zero probability `1 - target^(1/n)`, used for all three
//!   fields.
//! - `1 <= m < small_count_cutoff`: the exact (Clopper–Pearson) interval.
//! - larger counts with `m/n <= large_count_base_cutoff`: the closed-form
//!   solution of the normal bound with `sqrt(n p (1 - p))` evaluated at the
//!   bound itself and `1 - p` taken as 1.
//! - everything else: the plain normal approximation `m/n ± d σ / n`.
//!
//! `base` is `m/n` in every nonzero regime.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const ROOT_MAX_ITERATIONS: usize = 200;

/// Lower, central and upper probability estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTriple {
    pub low: f64,
    pub base: f64,
    pub high: f64,
}

impl ProbabilityTriple {
    pub fn uniform(p: f64) -> Self {
        ProbabilityTriple {
            low: p,
            base: p,
            high: p,
        }
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    /// `0 <= low <= base <= high <= 1`.
    pub fn is_ordered(&self) -> bool {
        0.0 <= self.low && self.low <= self.base && self.base <= self.high && self.high <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Standard deviations either side of the base estimate.
    pub d: f64,
    /// Counts below this use the exact binomial interval.
    pub small_count_cutoff: u64,
    /// Probability of observing zero occurrences used for unseen tokens.
    pub zero_target: f64,
    /// Base probability above which the plain normal form replaces the
    /// refined one.
    pub large_count_base_cutoff: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            d: 2.0,
            small_count_cutoff: 10,
            zero_target: 0.95,
            large_count_base_cutoff: 0.05,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(invalid(format!("d must be positive, got {}", self.d)));
        }
        if self.small_count_cutoff < 1 {
            return Err(invalid("small_count_cutoff must be at least 1"));
        }
        if !(self.zero_target > 0.0 && self.zero_target < 1.0) {
            return Err(invalid(format!(
                "zero_target must lie in (0, 1), got {}",
                self.zero_target
            )));
        }
        if !(self.large_count_base_cutoff > 0.0 && self.large_count_base_cutoff < 1.0) {
            return Err(invalid(format!(
                "large_count_base_cutoff must lie in (0, 1), got {}",
                self.large_count_base_cutoff
            )));
        }
        Ok(())
    }

    /// Two-sided miss probability matching `d` standard deviations.
    ///
    /// `d = 2` is the conventional 95% level and maps to exactly 0.05; any
    /// other value uses `2 (1 - Φ(d))`.
    pub fn alpha(&self) -> f64 {
        if self.d == 2.0 {
            0.05
        } else {
            2.0 * (1.0 - standard_normal_cdf(self.d))
        }
    }
}

/// Standard normal CDF, Abramowitz & Stegun 26.2.17 (|error| < 7.5e-8).
pub fn standard_normal_cdf(x: f64) -> f64 {
    const P: f64 = 0.231_641_9;
    const B: [f64; 5] = [
        0.319_381_530,
        -0.356_563_782,
        1.781_477_937,
        -1.821_255_978,
        1.330_274_429,
    ];
    let t = 1.0 / (1.0 + P * x.abs());
    let poly = t * (B[0] + t * (B[1] + t * (B[2] + t * (B[3] + t * B[4]))));
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let upper = density * poly;
    if x >= 0.0 {
        1.0 - upper
    } else {
        upper
    }
}

fn check_counts(m: u64, n: u64) -> Result<()> {
    if n == 0 {
        return Err(invalid("trial count n must be at least 1"));
    }
    if m > n {
        return Err(invalid(format!("count m = {m} exceeds n = {n}")));
    }
    Ok(())
}

fn check_d(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("d must be positive, got {d}")))
    }
}

pub fn base_probability(m: u64, n: u64) -> Result<f64> {
    check_counts(m, n)?;
    Ok(m as f64 / n as f64)
}

/// Normal approximation: `(m ± d sqrt(n p (1-p))) / n`, clamped to `[0, 1]`.
pub fn normal_interval(m: u64, n: u64, d: f64) -> Result<ProbabilityTriple> {
    check_counts(m, n)?;
    check_d(d)?;
    let (mf, nf) = (m as f64, n as f64);
    let base = mf / nf;
    let sigma = (nf * base * (1.0 - base)).sqrt();
    Ok(ProbabilityTriple {
        low: ((mf - d * sigma) / nf).max(0.0),
        base,
        high: ((mf + d * sigma) / nf).min(1.0),
    })
}

/// Normal bounds with the deviation evaluated at the bound itself and
/// `1 - p ≈ 1`, which solves to `(sqrt(d² + 4m) ∓ d)² / 4n`.
pub fn refined_interval(m: u64, n: u64, d: f64) -> Result<ProbabilityTriple> {
    check_counts(m, n)?;
    check_d(d)?;
    let (mf, nf) = (m as f64, n as f64);
    let root = (d * d + 4.0 * mf).sqrt();
    let low = (root - d).powi(2) / (4.0 * nf);
    let high = (root + d).powi(2) / (4.0 * nf);
    Ok(ProbabilityTriple {
        // rounding can push low a hair above m/n when d is tiny
        low: low.min(mf / nf),
        base: mf / nf,
        high: high.min(1.0).max(mf / nf),
    })
}

/// Exact interval for small counts, `1 <= m < cutoff`.
pub fn exact_small_count_interval(m: u64, n: u64, alpha: f64, cutoff: u64) -> Result<ProbabilityTriple> {
    if m == 0 {
        return Err(invalid(
            "zero counts use the zero probability, not the small-count interval",
        ));
    }
    if m >= cutoff {
        return Err(invalid(format!(
            "count {m} is not below the small-count cutoff {cutoff}"
        )));
    }
    clopper_pearson(m, n, alpha)
}

/// Clopper–Pearson interval with `base = m/n`.
///
/// `low` solves `P(X >= m | n, p) = alpha/2` and `high` solves
/// `P(X <= m | n, p) = alpha/2`, each by bisection on `[0, 1]`.
pub fn clopper_pearson(m: u64, n: u64, alpha: f64) -> Result<ProbabilityTriple> {
    check_counts(m, n)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let tail = alpha / 2.0;
    let base = m as f64 / n as f64;
    let low = if m == 0 {
        0.0
    } else {
        // P(X >= m) rises with p
        bisect(|p| tail - (1.0 - binomial_cdf(m - 1, n, p)))
    };
    let high = if m == n {
        1.0
    } else {
        // P(X <= m) falls with p
        bisect(|p| binomial_cdf(m, n, p) - tail)
    };
    Ok(ProbabilityTriple {
        low: low.min(base),
        base,
        high: high.max(base),
    })
}

/// Root of a function that is positive left of the root and negative right
/// of it on `[0, 1]`. Runs until the bracket stops shrinking.
fn bisect(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..ROOT_MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `P(X <= k)` for `X ~ Binomial(n, p)`, summed term by term in log space.
/// Only cheap for small `k`, which is all the small-count regime needs.
pub(crate) fn binomial_cdf(k: u64, n: u64, p: f64) -> f64 {
    if k >= n || p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let mut ln_choose = 0.0;
    let mut sum = 0.0;
    for j in 0..=k {
        if j > 0 {
            ln_choose += ((n - j + 1) as f64).ln() - (j as f64).ln();
        }
        sum += (ln_choose + j as f64 * ln_p + (n - j) as f64 * ln_q).exp();
    }
    sum.min(1.0)
}

/// `1 - target^(1/n)`: the probability at which zero occurrences in `n`
/// trials has probability `target`.
pub fn zero_probability(n: u64, target: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("trial count n must be at least 1"));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(invalid(format!("target must lie in (0, 1), got {target}")));
    }
    Ok(-(target.ln() / n as f64).exp_m1())
}

/// Regime dispatch for a token count `m` out of `n`.
pub fn estimate(m: u64, n: u64, config: &EstimatorConfig) -> Result<ProbabilityTriple> {
    check_counts(m, n)?;
    if m == 0 {
        return zero_probability(n, config.zero_target).map(ProbabilityTriple::uniform);
    }
    if m < config.small_count_cutoff {
        return exact_small_count_interval(m, n, config.alpha(), config.small_count_cutoff);
    }
    if (m as f64 / n as f64) <= config.large_count_base_cutoff {
        refined_interval(m, n, config.d)
    } else {
        normal_interval(m, n, config.d)
    }
}

/// Pooled a-priori token probability: `m / total`, or the zero probability
/// for `m = 0`.
pub fn prior_probability(m: u64, total: u64, config: &EstimatorConfig) -> Result<f64> {
    check_counts(m, total)?;
    if m == 0 {
        zero_probability(total, config.zero_target)
    } else {
        Ok(m as f64 / total as f64)
    }
}
