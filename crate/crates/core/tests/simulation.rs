use proptest::prelude::*;
use refdyn::dynamics::{closed_form_accuracy, TransitionRates};
use refdyn::estimate::{count_transitions, estimate_rates_at, wilson_interval};
use refdyn::schedule::{preset, RateSchedule};
use refdyn::sim::{analytic_trajectory, simulate_population, SimConfig};

fn config(schedule: RateSchedule, n: usize, k: usize, acc0: f64, seed: u64) -> SimConfig {
    SimConfig { n_problems: n, n_iterations: k, initial_accuracy: acc0, seed, schedule }
}

#[test]
fn mean_trajectory_is_unbiased() {
    let schedule = preset("gpt-4o-mini").unwrap();
    let (n, k, r) = (1000usize, 4usize, 200u64);
    let analytic = analytic_trajectory(&schedule, 0.912, k).unwrap();
    let mut sums = vec![0.0; k + 1];
    let mut sq = vec![0.0; k + 1];
    for seed in 0..r {
        let acc = simulate_population(&config(schedule.clone(), n, k, 0.912, seed)).unwrap().log.accuracies();
        for (t, a) in acc.iter().enumerate() {
            sums[t] += a;
            sq[t] += a * a;
        }
    }
    for t in 1..=k {
        let mean = sums[t] / r as f64;
        let var = (sq[t] / r as f64 - mean * mean).max(1e-12);
        let se = (var / r as f64).sqrt();
        let dev = (mean - analytic[t].accuracy).abs();
        assert!(dev < 4.0 * se, "iteration {t}: mean {mean}, analytic {}, se {se}", analytic[t].accuracy);
    }
}

#[test]
fn generating_rates_recovered_within_99_percent_intervals() {
    let rates = TransitionRates::new(0.05, 0.15).unwrap();
    let sim = simulate_population(&config(RateSchedule::stationary(rates), 10_000, 3, 0.5, 17)).unwrap();
    let est = estimate_rates_at(&sim.log, 0.99).unwrap();
    for t in &est.per_transition {
        assert!(t.eir.pool >= 50 && t.ecr.pool >= 50);
        assert!(t.eir.interval.contains(0.05), "{t:?}");
        assert!(t.ecr.interval.contains(0.15), "{t:?}");
    }
}

#[test]
fn absorbing_schedule_copies_column_zero() {
    let sim = simulate_population(&config(RateSchedule::stationary(TransitionRates::frozen()), 300, 5, 0.6, 4)).unwrap();
    for row in sim.log.rows() {
        assert!(row.iter().all(|&c| c == row[0]));
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let cfg = config(preset("claude-sonnet-4").unwrap(), 5_000, 4, 0.968, 99);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_population(&cfg).unwrap().log)
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn short_schedule_without_tail_is_rejected() {
    let s = preset("gpt-4o-mini").unwrap();
    assert!(simulate_population(&config(s.clone(), 10, 5, 0.9, 0)).is_err());
    assert!(simulate_population(&config(s.with_stationary_tail(true), 10, 5, 0.9, 0)).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn column_zero_count_is_exact(n in 1usize..400, acc0 in 0.0..=1.0f64, seed in any::<u64>()) {
        let rates = TransitionRates::new(0.1, 0.2).unwrap();
        let cfg = config(RateSchedule::stationary(rates), n, 1, acc0, seed);
        let sim = simulate_population(&cfg).unwrap();
        prop_assert_eq!(sim.log.correct_count(0).unwrap(), cfg.initial_correct());
        prop_assert_eq!(cfg.initial_correct(), ((n as f64) * acc0).round() as usize);
    }

    #[test]
    fn same_seed_same_log(seed in any::<u64>(), e in 0.0..=1.0f64, c in 0.0..=1.0f64) {
        let rates = TransitionRates::new(e, c).unwrap();
        let cfg = config(RateSchedule::stationary(rates), 200, 3, 0.7, seed);
        prop_assert_eq!(simulate_population(&cfg).unwrap().log, simulate_population(&cfg).unwrap().log);
    }

    /// Accounting identity and NB identity on arbitrary simulated logs.
    #[test]
    fn counts_account_for_every_problem(seed in any::<u64>(), e in 0.0..=1.0f64, c in 0.0..=1.0f64) {
        let rates = TransitionRates::new(e, c).unwrap();
        let log = simulate_population(&config(RateSchedule::stationary(rates), 150, 4, 0.6, seed)).unwrap().log;
        let n = log.n_problems();
        let est = estimate_rates_at(&log, 0.95).unwrap();
        for k in 0..4 {
            let t = count_transitions(&log, k).unwrap();
            prop_assert_eq!(t.total(), n);
            prop_assert_eq!(t.n_cc + t.n_ic, log.correct_count(k + 1).unwrap());
            prop_assert_eq!(t.n_cc + t.n_ci, log.correct_count(k).unwrap());
            let nb = est.accuracy_series[k + 1].net_benefit.unwrap();
            prop_assert!((nb - (t.n_ic as f64 - t.n_ci as f64) / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn pooled_rate_is_count_weighted_mean(seed in any::<u64>()) {
        let log = simulate_population(&config(preset("gpt-5").unwrap(), 400, 4, 0.962, seed)).unwrap().log;
        let est = estimate_rates_at(&log, 0.95).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for t in &est.per_transition {
            if let Some(v) = t.eir.value {
                num += v * t.eir.pool as f64;
                den += t.eir.pool as f64;
            }
        }
        prop_assert!((est.pooled_eir.value.unwrap() - num / den).abs() < 1e-12);
    }

    #[test]
    fn wilson_contains_estimate_and_narrows(x in 0u64..200, extra in 0u64..200, scale in 2u64..20) {
        let n = x + extra;
        prop_assume!(n > 0);
        let w = wilson_interval(x, n, 0.95).unwrap();
        let p = x as f64 / n as f64;
        prop_assert!(w.lo <= p + 1e-12 && p <= w.hi + 1e-12);
        let wider = wilson_interval(x * scale, n * scale, 0.95).unwrap();
        prop_assert!(wider.width() <= w.width() + 1e-12);
    }
}

#[test]
fn simulated_trajectory_tracks_closed_form() {
    let rates = TransitionRates::new(0.05, 0.15).unwrap();
    let log = simulate_population(&config(RateSchedule::stationary(rates), 10_000, 10, 0.5, 1)).unwrap().log;
    for (k, a) in log.accuracies().iter().enumerate() {
        assert!((a - closed_form_accuracy(k as u32, rates, 0.5)).abs() <= 0.015);
    }
}
