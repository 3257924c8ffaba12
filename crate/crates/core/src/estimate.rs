//! EIR/ECR estimation from correctness logs.
//!
//! A transition `k -> k+1` partitions the problems into four cells
//! (correct/incorrect before, correct/incorrect after). EIR is the fraction
//! of the correct pool that broke, ECR the fraction of the incorrect pool
//! that got fixed. A rate over an empty pool is reported as undefined
//! (`value: None`), never as zero.

use std::ops::Add;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::dynamics::AccuracyPoint;
use crate::log::{CorrectnessLog, LogError};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("log has no transitions (K = 0); at least two iterations are needed")]
    NoTransitions,
    #[error("transition {transition} out of range (log has transitions 0..{count})")]
    TransitionOutOfRange { transition: usize, count: usize },
    #[error("{successes} successes out of {trials} trials")]
    TooManySuccesses { successes: u64, trials: u64 },
    #[error("confidence level {0} must lie strictly between 0 and 1")]
    Confidence(f64),
}

/// The 2x2 table of one transition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TransitionCounts {
    pub n_cc: usize,
    pub n_ci: usize,
    pub n_ic: usize,
    pub n_ii: usize,
}

impl TransitionCounts {
    pub fn total(&self) -> usize {
        self.n_cc + self.n_ci + self.n_ic + self.n_ii
    }

    /// Problems correct before the transition.
    pub fn correct_pool(&self) -> usize {
        self.n_cc + self.n_ci
    }

    pub fn incorrect_pool(&self) -> usize {
        self.n_ic + self.n_ii
    }

    pub fn correct_after(&self) -> usize {
        self.n_cc + self.n_ic
    }

    pub fn eir(&self) -> Option<f64> {
        ratio(self.n_ci, self.correct_pool())
    }

    pub fn ecr(&self) -> Option<f64> {
        ratio(self.n_ic, self.incorrect_pool())
    }
}

impl Add for TransitionCounts {
    type Output = TransitionCounts;

    fn add(self, o: TransitionCounts) -> TransitionCounts {
        TransitionCounts {
            n_cc: self.n_cc + o.n_cc,
            n_ci: self.n_ci + o.n_ci,
            n_ic: self.n_ic + o.n_ic,
            n_ii: self.n_ii + o.n_ii,
        }
    }
}

impl std::iter::Sum for TransitionCounts {
    fn sum<I: Iterator<Item = TransitionCounts>>(iter: I) -> Self {
        iter.fold(TransitionCounts::default(), Add::add)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Tallies transition `k -> k+1` from two aligned columns.
pub fn count_columns(before: &[bool], after: &[bool]) -> TransitionCounts {
    let mut c = TransitionCounts::default();
    for (&b, &a) in before.iter().zip(after) {
        match (b, a) {
            (true, true) => c.n_cc += 1,
            (true, false) => c.n_ci += 1,
            (false, true) => c.n_ic += 1,
            (false, false) => c.n_ii += 1,
        }
    }
    c
}

pub fn count_transitions(log: &CorrectnessLog, k: usize) -> Result<TransitionCounts, EstimateError> {
    let transitions = log.n_iterations();
    if k >= transitions {
        return Err(EstimateError::TransitionOutOfRange { transition: k, count: transitions });
    }
    let mut c = TransitionCounts::default();
    for row in log.rows() {
        match (row[k], row[k + 1]) {
            (true, true) => c.n_cc += 1,
            (true, false) => c.n_ci += 1,
            (false, true) => c.n_ic += 1,
            (false, false) => c.n_ii += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilsonInterval {
    pub lo: f64,
    pub hi: f64,
    /// `false` when there were no trials; the interval is then `[0, 1]`.
    pub defined: bool,
}

impl WilsonInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Two-sided normal quantile for a central `confidence` mass.
pub fn z_for_confidence(confidence: f64) -> Result<f64, EstimateError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(EstimateError::Confidence(confidence));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + confidence / 2.0))
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<WilsonInterval, EstimateError> {
    if successes > trials {
        return Err(EstimateError::TooManySuccesses { successes, trials });
    }
    let z = z_for_confidence(confidence)?;
    if trials == 0 {
        return Ok(WilsonInterval { lo: 0.0, hi: 1.0, defined: false });
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    Ok(WilsonInterval { lo, hi, defined: true })
}

/// One rate with the counts it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    /// `None` when the conditioning pool is empty.
    pub value: Option<f64>,
    pub events: usize,
    pub pool: usize,
    pub interval: WilsonInterval,
}

impl RateEstimate {
    pub fn from_counts(events: usize, pool: usize, confidence: f64) -> Result<Self, EstimateError> {
        Ok(Self {
            value: ratio(events, pool),
            events,
            pool,
            interval: wilson_interval(events as u64, pool as u64, confidence)?,
        })
    }

    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionEstimate {
    /// Index `k` of the transition `k -> k+1`.
    pub transition: usize,
    pub counts: TransitionCounts,
    pub eir: RateEstimate,
    pub ecr: RateEstimate,
}

impl TransitionEstimate {
    fn from_counts(transition: usize, counts: TransitionCounts, confidence: f64) -> Result<Self, EstimateError> {
        Ok(Self {
            transition,
            counts,
            eir: RateEstimate::from_counts(counts.n_ci, counts.correct_pool(), confidence)?,
            ecr: RateEstimate::from_counts(counts.n_ic, counts.incorrect_pool(), confidence)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEstimates {
    pub confidence: f64,
    pub per_transition: Vec<TransitionEstimate>,
    /// Count-pooled over all transitions.
    pub pooled_eir: RateEstimate,
    pub pooled_ecr: RateEstimate,
    pub accuracy_series: Vec<AccuracyPoint>,
}

pub fn estimate_rates(log: &CorrectnessLog) -> Result<RateEstimates, EstimateError> {
    estimate_rates_at(log, DEFAULT_CONFIDENCE)
}

/// Maximum-likelihood per-transition rates with Wilson intervals at `confidence`.
pub fn estimate_rates_at(log: &CorrectnessLog, confidence: f64) -> Result<RateEstimates, EstimateError> {
    if log.n_iterations() == 0 {
        return Err(EstimateError::NoTransitions);
    }
    let per_transition = (0..log.n_iterations())
        .map(|k| TransitionEstimate::from_counts(k, count_transitions(log, k)?, confidence))
        .collect::<Result<Vec<_>, _>>()?;
    let pooled: TransitionCounts = per_transition.iter().map(|t| t.counts).sum();
    Ok(RateEstimates {
        confidence,
        pooled_eir: RateEstimate::from_counts(pooled.n_ci, pooled.correct_pool(), confidence)?,
        pooled_ecr: RateEstimate::from_counts(pooled.n_ic, pooled.incorrect_pool(), confidence)?,
        per_transition,
        accuracy_series: AccuracyPoint::series(&log.accuracies()),
    })
}

/// Count-pooled rates over a run of transitions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PooledRates {
    pub eir: Option<f64>,
    pub ecr: Option<f64>,
    pub counts: TransitionCounts,
}

impl PooledRates {
    pub fn from_counts(counts: TransitionCounts) -> Self {
        Self { eir: counts.eir(), ecr: counts.ecr(), counts }
    }

    /// Both rates are defined.
    pub fn is_defined(&self) -> bool {
        self.eir.is_some() && self.ecr.is_some()
    }
}

/// Pools transitions `0..=upto_transition` by summing counts before dividing.
///
/// A log without transitions yields an all-undefined result.
pub fn running_pooled_rates(log: &CorrectnessLog, upto_transition: usize) -> Result<PooledRates, EstimateError> {
    let count = log.n_iterations();
    if count == 0 {
        return Ok(PooledRates::default());
    }
    if upto_transition >= count {
        return Err(EstimateError::TransitionOutOfRange { transition: upto_transition, count });
    }
    let counts = (0..=upto_transition)
        .map(|k| count_transitions(log, k))
        .sum::<Result<TransitionCounts, _>>()?;
    Ok(PooledRates::from_counts(counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn log(rows: Vec<Vec<bool>>) -> CorrectnessLog {
        CorrectnessLog::new(CorrectnessLog::numbered_ids(rows.len()), rows).unwrap()
    }

    #[test]
    fn toy_counts() {
        let l = log(vec![vec![true, false], vec![false, true]]);
        assert_eq!(
            count_transitions(&l, 0).unwrap(),
            TransitionCounts { n_cc: 0, n_ci: 1, n_ic: 1, n_ii: 0 }
        );
        assert!(count_transitions(&l, 1).is_err());
        let all = log(vec![vec![true, true]; 5]);
        assert_eq!(count_transitions(&all, 0).unwrap(), TransitionCounts { n_cc: 5, ..Default::default() });
    }

    #[test]
    fn empty_pool_is_undefined() {
        let all = log(vec![vec![true, true]; 5]);
        let est = estimate_rates(&all).unwrap();
        let t = &est.per_transition[0];
        assert_eq!(t.eir.value, Some(0.0));
        assert_eq!(t.ecr.value, None);
        assert!(!t.ecr.interval.defined);
        assert!(t.eir.interval.contains(0.0));
    }

    #[test]
    fn needs_a_transition() {
        let l = log(vec![vec![true]]);
        assert_eq!(estimate_rates(&l).unwrap_err(), EstimateError::NoTransitions);
        assert_eq!(running_pooled_rates(&l, 0).unwrap(), PooledRates::default());
    }

    #[test]
    fn wilson_examples() {
        let w = wilson_interval(0, 456, 0.95).unwrap();
        assert_eq!(w.lo, 0.0);
        assert_abs_diff_eq!(w.hi, 0.008354, epsilon = 5e-6);
        let w = wilson_interval(10, 10, 0.95).unwrap();
        assert_eq!(w.hi, 1.0);
        let w = wilson_interval(5, 10, 0.95).unwrap();
        assert!(w.contains(0.5));
        assert_abs_diff_eq!(0.5 - w.lo, w.hi - 0.5, epsilon = 1e-12);
        let w = wilson_interval(0, 0, 0.95).unwrap();
        assert!(!w.defined);
        assert_eq!((w.lo, w.hi), (0.0, 1.0));
        assert!(wilson_interval(3, 2, 0.95).is_err());
        assert!(wilson_interval(1, 2, 1.0).is_err());
    }

    #[test]
    fn z_quantile() {
        assert_abs_diff_eq!(z_for_confidence(0.95).unwrap(), 1.959_963_984_540_054, epsilon = 1e-9);
        assert_abs_diff_eq!(z_for_confidence(0.99).unwrap(), 2.575_829_303_548_901, epsilon = 1e-9);
    }

    #[test]
    fn running_pool_of_one_transition_matches_estimate() {
        let l = log(vec![
            vec![true, false, false],
            vec![true, true, false],
            vec![false, true, true],
            vec![false, false, true],
        ]);
        let est = estimate_rates(&l).unwrap();
        let p = running_pooled_rates(&l, 0).unwrap();
        assert_eq!(p.eir, est.per_transition[0].eir.value);
        assert_eq!(p.ecr, est.per_transition[0].ecr.value);
        let all = running_pooled_rates(&l, 1).unwrap();
        assert_eq!(all.eir, est.pooled_eir.value);
        assert!(running_pooled_rates(&l, 2).is_err());
    }
}
