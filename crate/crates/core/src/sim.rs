//! Population simulation and analytic replay under a rate schedule.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{step_accuracy, AccuracyPoint};
use crate::log::{CorrectnessLog, LogError};
use crate::rng::{self, Purpose, RNG_ID};
use crate::schedule::{RateSchedule, ScheduleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("invalid simulation config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_problems: usize,
    pub n_iterations: usize,
    pub initial_accuracy: f64,
    pub seed: u64,
    pub schedule: RateSchedule,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_problems == 0 {
            return Err(SimError::Config("n_problems must be at least 1".into()));
        }
        if self.n_iterations == 0 {
            return Err(SimError::Config("n_iterations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.initial_accuracy) {
            return Err(SimError::Config(format!(
                "initial accuracy {} is not a probability",
                self.initial_accuracy
            )));
        }
        self.schedule.ensure_covers(self.n_iterations)?;
        Ok(())
    }

    /// Problems marked correct at iteration 0.
    pub fn initial_correct(&self) -> usize {
        initial_correct(self.n_problems, self.initial_accuracy)
    }
}

fn initial_correct(n: usize, acc0: f64) -> usize {
    ((n as f64 * acc0).round() as usize).min(n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrajectory {
    pub log: CorrectnessLog,
    pub config: SimConfig,
}

/// Draws one realisation of N independent chains.
///
/// Iteration 0 has exactly `round(N * Acc0)` correct problems, placed by a
/// seeded shuffle. Each later column is produced from the previous one by
/// per-problem Bernoulli transitions at the scheduled rates.
pub fn simulate_population(config: &SimConfig) -> Result<SimTrajectory, SimError> {
    config.validate()?;
    let n = config.n_problems;
    let k = config.n_iterations;
    let rates: Vec<_> = (0..k).map(|t| config.schedule.rates_at(t)).collect::<Result<_, _>>()?;

    let mut initial = vec![false; n];
    initial[..config.initial_correct()].fill(true);
    initial.shuffle(&mut rng::substream(config.seed, Purpose::InitialAssignment, 0));

    let rows: Vec<Vec<bool>> = initial
        .par_iter()
        .enumerate()
        .map(|(i, &start)| {
            let mut stream = rng::substream(config.seed, Purpose::Transitions, i as u64);
            let mut row = Vec::with_capacity(k + 1);
            let mut state = start;
            row.push(state);
            for r in &rates {
                let flip = if state { r.eir() } else { r.ecr() };
                if rng::bernoulli(&mut stream, flip) {
                    state = !state;
                }
                row.push(state);
            }
            row
        })
        .collect();

    let mut log = CorrectnessLog::new(CorrectnessLog::numbered_ids(n), rows)?
        .with_metadata("source", "simulate")
        .with_metadata("seed", config.seed.to_string())
        .with_metadata("rng", RNG_ID);
    if let Some(name) = &config.schedule.name {
        log = log.with_metadata("model", name.clone());
    }
    Ok(SimTrajectory { log, config: config.clone() })
}

/// Expected accuracy trajectory `Acc(0..=k)` under the schedule.
pub fn analytic_trajectory(
    schedule: &RateSchedule,
    acc0: f64,
    k: usize,
) -> Result<Vec<AccuracyPoint>, SimError> {
    schedule.ensure_covers(k)?;
    let mut acc = Vec::with_capacity(k + 1);
    acc.push(acc0);
    for t in 0..k {
        let next = step_accuracy(acc[t], schedule.rates_at(t)?);
        acc.push(next);
    }
    Ok(AccuracyPoint::series(&acc))
}

/// A noise-free log whose transition counts are the scheduled rates applied
/// to the current pools, rounded to whole problems.
///
/// At each transition the lowest-indexed `round(EIR * correct)` correct
/// problems become incorrect and the lowest-indexed `round(ECR * incorrect)`
/// incorrect problems become correct. Iteration 0 marks the first
/// `round(N * Acc0)` problems correct.
pub fn replay_log(
    schedule: &RateSchedule,
    n_problems: usize,
    acc0: f64,
    k: usize,
) -> Result<CorrectnessLog, SimError> {
    if n_problems == 0 {
        return Err(SimError::Config("n_problems must be at least 1".into()));
    }
    schedule.ensure_covers(k)?;
    let mut state: Vec<bool> = (0..n_problems).map(|i| i < initial_correct(n_problems, acc0)).collect();
    let mut rows: Vec<Vec<bool>> = state.iter().map(|&s| vec![s]).collect();
    for t in 0..k {
        let r = schedule.rates_at(t)?;
        let correct_pool = state.iter().filter(|&&s| s).count();
        let to_break = (r.eir() * correct_pool as f64).round() as usize;
        let to_fix = (r.ecr() * (n_problems - correct_pool) as f64).round() as usize;
        let (mut broken, mut fixed) = (0, 0);
        for s in state.iter_mut() {
            if *s && broken < to_break {
                *s = false;
                broken += 1;
            } else if !*s && fixed < to_fix {
                *s = true;
                fixed += 1;
            }
        }
        for (row, &s) in rows.iter_mut().zip(&state) {
            row.push(s);
        }
    }
    let mut log = CorrectnessLog::new(CorrectnessLog::numbered_ids(n_problems), rows)?
        .with_metadata("source", "replay");
    if let Some(name) = &schedule.name {
        log = log.with_metadata("model", name.clone());
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::TransitionRates;
    use crate::schedule::preset;
    use approx::assert_abs_diff_eq;

    fn config(schedule: RateSchedule, n: usize, k: usize, acc0: f64, seed: u64) -> SimConfig {
        SimConfig { n_problems: n, n_iterations: k, initial_accuracy: acc0, seed, schedule }
    }

    #[test]
    fn column_zero_count_is_exact() {
        for (n, acc0) in [(500, 0.912), (7, 0.5), (1, 1.0), (3, 0.0)] {
            let t = simulate_population(&config(preset("gpt-4o-mini").unwrap(), n, 4, acc0, 11)).unwrap();
            assert_eq!(t.log.correct_count(0).unwrap(), (n as f64 * acc0).round() as usize);
        }
    }

    #[test]
    fn frozen_schedule_keeps_every_column() {
        let s = RateSchedule::stationary(TransitionRates::frozen());
        let t = simulate_population(&config(s, 300, 6, 0.4, 3)).unwrap();
        for row in t.log.rows() {
            assert!(row.iter().all(|&c| c == row[0]));
        }
    }

    #[test]
    fn same_seed_same_log() {
        let c = config(preset("gpt-5").unwrap(), 400, 4, 0.962, 42);
        assert_eq!(simulate_population(&c).unwrap().log, simulate_population(&c).unwrap().log);
        let other = SimConfig { seed: 43, ..c.clone() };
        assert_ne!(simulate_population(&c).unwrap().log, simulate_population(&other).unwrap().log);
    }

    #[test]
    fn short_schedule_is_an_error() {
        let c = config(preset("gpt-4o-mini").unwrap(), 10, 5, 0.9, 1);
        assert!(matches!(simulate_population(&c), Err(SimError::Schedule(ScheduleError::TooShort { .. }))));
        let tail = SimConfig { schedule: c.schedule.clone().with_stationary_tail(true), ..c };
        assert!(simulate_population(&tail).is_ok());
    }

    #[test]
    fn invalid_configs() {
        let s = preset("gpt-4o-mini").unwrap();
        assert!(simulate_population(&config(s.clone(), 0, 4, 0.9, 1)).is_err());
        assert!(simulate_population(&config(s.clone(), 10, 0, 0.9, 1)).is_err());
        assert!(simulate_population(&config(s, 10, 4, 1.2, 1)).is_err());
    }

    #[test]
    fn analytic_replay_of_gpt_4o_mini() {
        let traj = analytic_trajectory(&preset("gpt-4o-mini").unwrap(), 0.912, 4).unwrap();
        let expected = [0.912, 0.900, 0.896, 0.866, 0.850];
        for (p, e) in traj.iter().zip(expected) {
            assert_abs_diff_eq!(p.accuracy, e, epsilon = 0.0015);
        }
        assert_eq!(traj[0].net_benefit, None);
    }

    #[test]
    fn analytic_replay_of_frozen_schedule() {
        let s = RateSchedule::new(vec![TransitionRates::frozen(); 3]).unwrap();
        let traj = analytic_trajectory(&s, 0.7, 3).unwrap();
        assert!(traj.iter().all(|p| p.accuracy == 0.7));
    }

    #[test]
    fn replay_log_pools() {
        let log = replay_log(&preset("gpt-4o-mini").unwrap(), 500, 0.912, 4).unwrap();
        let counts: Vec<usize> = (0..=4).map(|k| log.correct_count(k).unwrap()).collect();
        assert_eq!(counts, vec![456, 450, 448, 433, 425]);
    }
}
