use proptest::prelude::*;
use refdyn::baselines::*;

/// Independent oracle: sum over all 2^k outcomes.
fn brute_force_majority(p: f64, k: usize) -> f64 {
    (0u32..1 << k)
        .filter(|mask| 2 * mask.count_ones() as usize > k)
        .map(|mask| {
            let right = mask.count_ones() as i32;
            p.powi(right) * (1.0 - p).powi(k as i32 - right)
        })
        .sum()
}

proptest! {
    #[test]
    fn closed_form_matches_enumeration(p in 0.0..=1.0f64, half in 0usize..6) {
        let k = 2 * half + 1;
        prop_assert!((theoretical_sc_accuracy(p, k).unwrap() - brute_force_majority(p, k)).abs() < 1e-12);
    }

    /// More votes help when single samples are better than chance, hurt below.
    #[test]
    fn accuracy_monotone_in_k(p in 0.0..=1.0f64, half in 0usize..10) {
        let k = 2 * half + 1;
        let now = theoretical_sc_accuracy(p, k).unwrap();
        let next = theoretical_sc_accuracy(p, k + 2).unwrap();
        if p > 0.5 {
            prop_assert!(next >= now - 1e-12);
        } else if p < 0.5 {
            prop_assert!(next <= now + 1e-12);
        }
    }

    #[test]
    fn mixture_interpolates(p in 0.5..=1.0f64, rho in 0.0..=1.0f64) {
        let m = CorrelatedSampleModel::new(p, rho, 3).unwrap();
        let sc = theoretical_sc_accuracy(p, 3).unwrap();
        let a = m.expected_accuracy();
        prop_assert!(a >= p - 1e-12 && a <= sc + 1e-12);
    }

    #[test]
    fn fit_inverts_the_mixture(p in 0.55..0.99f64, rho in 0.0..=1.0f64) {
        let target = CorrelatedSampleModel::new(p, rho, 3).unwrap().expected_accuracy();
        let fitted = fit_correlation(p, 3, target).unwrap();
        let back = CorrelatedSampleModel::new(p, fitted, 3).unwrap().expected_accuracy();
        prop_assert!((back - target).abs() < 1e-9);
    }

    #[test]
    fn vote_picks_a_maximal_answer(answers in prop::collection::vec(0u8..4, 1..30)) {
        let v = majority_vote(&answers).unwrap();
        let count = |x: u8| answers.iter().filter(|&&a| a == x).count();
        let best = (0..4).map(count).max().unwrap();
        prop_assert_eq!(count(v.chosen), best);
        let first_best = answers.iter().copied().find(|&a| count(a) == best).unwrap();
        prop_assert_eq!(v.chosen, first_best);
    }
}

#[test]
fn simulation_agrees_with_expectation_on_a_grid() {
    for &p in &[0.6, 0.8, 0.912] {
        for &rho in &[0.0, 0.4, 0.8] {
            let m = CorrelatedSampleModel::new(p, rho, 3).unwrap();
            let sim = simulate_self_consistency(m, 40_000, 5);
            let sd = (m.expected_accuracy() * (1.0 - m.expected_accuracy()) / 40_000.0).sqrt();
            assert!((sim.accuracy - m.expected_accuracy()).abs() < 5.0 * sd + 1e-9, "p={p} rho={rho}");
        }
    }
}
