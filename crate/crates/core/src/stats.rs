//! Paired significance tests on correctness columns.
//!
//! McNemar's test is the uncorrected form `(b - c)^2 / (b + c)` with a
//! chi-square(1) tail. The continuity-corrected variant gives 4.17 for
//! `(6, 0)` where the reference tables print 6.00, so it is not offered.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::log::{CorrectnessLog, LogError};
use crate::rng::{self, Purpose};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const MIN_RESAMPLES: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("paired columns differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("paired columns are empty")]
    Empty,
    #[error("at least {MIN_RESAMPLES} bootstrap resamples are required, got {0}")]
    TooFewResamples(usize),
    #[error("confidence level {0} must lie strictly between 0 and 1")]
    Confidence(f64),
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 1_000;

/// Series for the lower regularised gamma `P(a, x)`; converges fast for `x < a + 1`.
fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Continued fraction (modified Lentz) for the upper regularised gamma `Q(a, x)`; used for `x >= a + 1`.
fn upper_gamma_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Upper regularised incomplete gamma `Q(a, x) = Gamma(a, x) / Gamma(a)`.
pub fn upper_regularized_gamma(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - lower_gamma_series(a, x)
    } else {
        upper_gamma_fraction(a, x)
    }
}

/// `P(X > x)` for `X ~ chi-square(df)`.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    upper_regularized_gamma(df / 2.0, x / 2.0)
}

// ---------------------------------------------------------------------------
// McNemar
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McNemarResult {
    /// Correct in the first column, incorrect in the second.
    pub b: usize,
    /// Incorrect in the first column, correct in the second.
    pub c: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub significant: bool,
    /// `false` when `b + c = 0`; statistic and p are then 0 and 1.
    pub discordant: bool,
}

pub fn mcnemar(b: usize, c: usize) -> McNemarResult {
    mcnemar_at(b, c, DEFAULT_ALPHA)
}

pub fn mcnemar_at(b: usize, c: usize, alpha: f64) -> McNemarResult {
    if b + c == 0 {
        return McNemarResult { b, c, statistic: 0.0, p_value: 1.0, alpha, significant: false, discordant: false };
    }
    let diff = b as f64 - c as f64;
    let statistic = diff * diff / (b + c) as f64;
    let p_value = chi_square_sf(statistic, 1.0);
    McNemarResult { b, c, statistic, p_value, alpha, significant: p_value < alpha, discordant: true }
}

fn check_paired(a: &[bool], b: &[bool]) -> Result<(), StatError> {
    if a.len() != b.len() {
        return Err(StatError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(StatError::Empty);
    }
    Ok(())
}

/// McNemar on two aligned correctness columns.
pub fn mcnemar_columns(first: &[bool], second: &[bool]) -> Result<McNemarResult, StatError> {
    check_paired(first, second)?;
    let b = first.iter().zip(second).filter(|(&x, &y)| x && !y).count();
    let c = first.iter().zip(second).filter(|(&x, &y)| !x && y).count();
    Ok(mcnemar(b, c))
}

/// McNemar between an iteration of one log and an iteration of another
/// (or the same) log, after checking the problem ids line up.
pub fn mcnemar_between(
    first: &CorrectnessLog,
    first_iteration: usize,
    second: &CorrectnessLog,
    second_iteration: usize,
) -> Result<McNemarResult, StatError> {
    first.ensure_aligned(second)?;
    mcnemar_columns(&first.column(first_iteration)?, &second.column(second_iteration)?)
}

// ---------------------------------------------------------------------------
// Paired bootstrap
// ---------------------------------------------------------------------------

/// Accuracy difference `second - first` in percentage points with a
/// percentile bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapDelta {
    pub delta_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub confidence: f64,
    pub resamples: usize,
    pub seed: u64,
}

impl BootstrapDelta {
    pub fn width(&self) -> f64 {
        self.ci_hi - self.ci_lo
    }

    pub fn brackets(&self, value: f64) -> bool {
        self.ci_lo <= value && value <= self.ci_hi
    }
}

/// Linear-interpolated quantile of sorted data (Hyndman-Fan type 7).
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn paired_bootstrap_delta(
    first: &[bool],
    second: &[bool],
    resamples: usize,
    seed: u64,
) -> Result<BootstrapDelta, StatError> {
    paired_bootstrap_delta_at(first, second, resamples, seed, 0.95)
}

/// Resamples problems with replacement; resample `r` uses its own substream.
pub fn paired_bootstrap_delta_at(
    first: &[bool],
    second: &[bool],
    resamples: usize,
    seed: u64,
    confidence: f64,
) -> Result<BootstrapDelta, StatError> {
    check_paired(first, second)?;
    if resamples < MIN_RESAMPLES {
        return Err(StatError::TooFewResamples(resamples));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatError::Confidence(confidence));
    }
    let diffs: Vec<i32> = first.iter().zip(second).map(|(&a, &b)| b as i32 - a as i32).collect();
    let n = diffs.len();
    let to_pp = 100.0 / n as f64;
    let delta_hat = diffs.iter().sum::<i32>() as f64 * to_pp;

    let mut deltas: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng::substream(seed, Purpose::Bootstrap, r as u64);
            let total: i64 = (0..n).map(|_| diffs[stream.gen_range(0..n)] as i64).sum();
            total as f64 * to_pp
        })
        .collect();
    deltas.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    Ok(BootstrapDelta {
        delta_hat,
        ci_lo: quantile_sorted(&deltas, tail),
        ci_hi: quantile_sorted(&deltas, 1.0 - tail),
        confidence,
        resamples,
        seed,
    })
}
