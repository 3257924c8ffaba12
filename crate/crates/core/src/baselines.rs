//! Self-consistency: sample `k` answers independently and keep the plurality.
//!
//! [`CorrelatedSampleModel`] is a one-parameter common-cause mixture used to
//! explain why observed self-consistency falls short of the independent-sample
//! closed form: with probability `rho` all `k` samples copy a single
//! Bernoulli(p) draw, otherwise they are i.i.d. Its accuracy is therefore
//! `rho * p + (1 - rho) * theoretical_sc_accuracy(p, k)`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("majority vote over an even number of samples ({0}) is ambiguous; use an odd k")]
    EvenK(usize),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("{name} must be a probability in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("cannot vote over an empty answer list")]
    NoAnswers,
    #[error("target accuracy {target} is outside the reachable range [{lo}, {hi}]")]
    Unreachable { target: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoteOutcome<T> {
    pub chosen: T,
    /// Distinct answers in first-seen order with their tallies.
    pub counts: Vec<(T, usize)>,
    pub tie_broken: bool,
}

/// Plurality vote; ties go to the answer seen first.
pub fn majority_vote<T: PartialEq + Clone>(answers: &[T]) -> Result<VoteOutcome<T>, BaselineError> {
    let mut counts: Vec<(T, usize)> = Vec::new();
    for a in answers {
        match counts.iter_mut().find(|(seen, _)| seen == a) {
            Some((_, n)) => *n += 1,
            None => counts.push((a.clone(), 1)),
        }
    }
    let best = counts.iter().map(|(_, n)| *n).max().ok_or(BaselineError::NoAnswers)?;
    let chosen = counts.iter().find(|(_, n)| *n == best).expect("max exists").0.clone();
    let tie_broken = counts.iter().filter(|(_, n)| *n == best).count() > 1;
    Ok(VoteOutcome { chosen, counts, tie_broken })
}

fn check_p(name: &'static str, value: f64) -> Result<(), BaselineError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(BaselineError::Probability { name, value })
    }
}

fn check_odd(k: usize) -> Result<(), BaselineError> {
    match k {
        0 => Err(BaselineError::ZeroK),
        k if k % 2 == 0 => Err(BaselineError::EvenK(k)),
        _ => Ok(()),
    }
}

/// Probability that a strict majority of `k` independent samples is correct.
pub fn theoretical_sc_accuracy(p: f64, k: usize) -> Result<f64, BaselineError> {
    check_p("p", p)?;
    check_odd(k)?;
    let q = 1.0 - p;
    let mut binom = 1.0f64;
    let mut total = 0.0;
    for j in 0..=k {
        if j > 0 {
            binom = binom * (k - j + 1) as f64 / j as f64;
        }
        if 2 * j > k {
            total += binom * p.powi(j as i32) * q.powi((k - j) as i32);
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatedSampleModel {
    pub p: f64,
    pub rho: f64,
    pub k: usize,
}

impl CorrelatedSampleModel {
    pub fn new(p: f64, rho: f64, k: usize) -> Result<Self, BaselineError> {
        check_p("p", p)?;
        check_p("rho", rho)?;
        check_odd(k)?;
        Ok(Self { p, rho, k })
    }

    /// Expected majority-vote accuracy under the mixture.
    pub fn expected_accuracy(&self) -> f64 {
        let independent = theoretical_sc_accuracy(self.p, self.k).expect("validated");
        self.rho * self.p + (1.0 - self.rho) * independent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
enum Sample {
    Right,
    Wrong,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScSimulation {
    pub model: CorrelatedSampleModel,
    pub n_problems: usize,
    pub seed: u64,
    pub correct: usize,
    pub accuracy: f64,
}

/// Majority-votes `k` samples per problem for `n_problems` problems.
///
/// Every wrong sample carries the same wrong answer, the least favourable
/// case for voting, which makes the odd-`k` result match the closed form.
pub fn simulate_self_consistency(model: CorrelatedSampleModel, n_problems: usize, seed: u64) -> ScSimulation {
    let correct = (0..n_problems)
        .into_par_iter()
        .filter(|&i| {
            let mut stream = rng::substream(seed, Purpose::SelfConsistency, i as u64);
            let shared = rng::bernoulli(&mut stream, model.rho);
            let samples: Vec<Sample> = if shared {
                let s = draw(&mut stream, model.p);
                vec![s; model.k]
            } else {
                (0..model.k).map(|_| draw(&mut stream, model.p)).collect()
            };
            majority_vote(&samples).expect("k >= 1").chosen == Sample::Right
        })
        .count();
    ScSimulation {
        model,
        n_problems,
        seed,
        correct,
        accuracy: if n_problems == 0 { 0.0 } else { correct as f64 / n_problems as f64 },
    }
}

fn draw(stream: &mut impl rand::RngCore, p: f64) -> Sample {
    if rng::bernoulli(stream, p) {
        Sample::Right
    } else {
        Sample::Wrong
    }
}

/// Finds the mixture weight whose expected accuracy equals `target` by bisection.
///
/// Accuracy is monotone in `rho` (non-increasing for `p > 0.5`), so the
/// target must lie between `p` and the independent-sample accuracy.
pub fn fit_correlation(p: f64, k: usize, target: f64) -> Result<f64, BaselineError> {
    let acc = |rho: f64| CorrelatedSampleModel::new(p, rho, k).map(|m| m.expected_accuracy());
    let at0 = acc(0.0)?;
    let at1 = acc(1.0)?;
    let (lo, hi) = (at0.min(at1), at0.max(at1));
    if !(lo..=hi).contains(&target) {
        return Err(BaselineError::Unreachable { target, lo, hi });
    }
    let decreasing = at1 < at0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let above = acc(mid)? > target;
        if above == decreasing {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}
