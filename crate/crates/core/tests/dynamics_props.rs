use proptest::prelude::*;
use refdyn::dynamics::*;

/// Row vector [Acc, 1-Acc] times P^k by repeated 2x2 multiplication.
fn matrix_power_accuracy(k: u32, eir: f64, ecr: f64, acc0: f64) -> f64 {
    let p = [[1.0 - eir, eir], [ecr, 1.0 - ecr]];
    let mut v = [acc0, 1.0 - acc0];
    for _ in 0..k {
        v = [v[0] * p[0][0] + v[1] * p[1][0], v[0] * p[0][1] + v[1] * p[1][1]];
    }
    v[0]
}

fn rates() -> impl Strategy<Value = TransitionRates> {
    (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(e, c)| TransitionRates::new(e, c).unwrap())
}

proptest! {
    #[test]
    fn closed_form_equals_matrix_power(r in rates(), acc0 in 0.0..=1.0f64, k in 0u32..=64) {
        let oracle = matrix_power_accuracy(k, r.eir(), r.ecr(), acc0);
        prop_assert!((closed_form_accuracy(k, r, acc0) - oracle).abs() <= 1e-12);
    }

    #[test]
    fn recurrence_equals_closed_form(r in rates(), acc0 in 0.0..=1.0f64, k in 0u32..=30) {
        let mut acc = acc0;
        for _ in 0..k {
            acc = step_accuracy(acc, r);
        }
        prop_assert!((acc - closed_form_accuracy(k, r, acc0)).abs() <= 1e-12);
    }

    #[test]
    fn accuracy_stays_a_probability(r in rates(), acc0 in 0.0..=1.0f64, k in 0u32..=64) {
        let a = closed_form_accuracy(k, r, acc0);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&a));
    }

    #[test]
    fn net_benefit_is_one_step_change(r in rates(), acc in 0.0..=1.0f64) {
        prop_assert!((net_benefit(acc, r) - (step_accuracy(acc, r) - acc)).abs() <= 1e-15);
    }

    #[test]
    fn steady_state_is_a_fixed_point(r in rates()) {
        let ss = steady_state(r);
        prop_assert_eq!(ss.absorbing, r.eir() == 0.0 && r.ecr() == 0.0);
        prop_assert!(ss.lambda2 >= -1.0 && ss.lambda2 <= 1.0);
        if let Some(pi) = ss.pi_star {
            prop_assert!((step_accuracy(pi, r) - pi).abs() <= 1e-15);
            prop_assert!(net_benefit(pi, r).abs() <= EQUILIBRIUM_TOLERANCE);
        }
    }

    #[test]
    fn verdict_agrees_with_ratio_comparison(
        e in 1e-4..=1.0f64, c in 1e-4..=1.0f64, acc in 0.0..0.9999f64,
    ) {
        let r = TransitionRates::new(e, c).unwrap();
        let v = stop_or_iterate(acc, r);
        let lhs = c / e;
        let rhs = acc / (1.0 - acc);
        match v.tag {
            VerdictTag::Iterate => prop_assert!(lhs > rhs * (1.0 - 1e-9)),
            VerdictTag::Stop => prop_assert!(lhs < rhs * (1.0 + 1e-9)),
            VerdictTag::AtEquilibrium => prop_assert!(v.net_benefit.abs() <= EQUILIBRIUM_TOLERANCE),
        }
    }

    /// Above the steady state the trajectory falls, below it rises.
    #[test]
    fn verdict_matches_side_of_steady_state(r in rates(), acc in 0.0..=1.0f64) {
        if let Some(pi) = steady_state(r).pi_star {
            let tag = stop_or_iterate(acc, r).tag;
            if acc > pi + 1e-9 && r.eir() + r.ecr() > 1e-6 {
                prop_assert_ne!(tag, VerdictTag::Iterate);
            }
            if acc < pi - 1e-9 && r.eir() + r.ecr() > 1e-6 {
                prop_assert_ne!(tag, VerdictTag::Stop);
            }
        }
    }

    /// log|Acc(k) - pi*| is affine in k with slope log|lambda2|.
    #[test]
    fn convergence_is_geometric(
        e in 0.001..=0.999f64, c in 0.001..=0.999f64, acc0 in 0.0..=1.0f64,
    ) {
        let r = TransitionRates::new(e, c).unwrap();
        let pi = steady_state(r).pi_star.unwrap();
        let lambda = subdominant_eigenvalue(r);
        prop_assume!(lambda.abs() > 1e-3 && (acc0 - pi).abs() > 1e-3);
        let base = (acc0 - pi).abs().ln();
        for k in 1..=30u32 {
            let gap = (closed_form_accuracy(k, r, acc0) - pi).abs();
            if gap < 1e-6 {
                break;
            }
            let predicted = base + k as f64 * lambda.abs().ln();
            prop_assert!((gap.ln() - predicted).abs() <= 1e-9, "k={} gap={}", k, gap);
        }
    }
}

#[test]
fn absorbing_rates_freeze_accuracy() {
    for k in [0, 1, 7, 64] {
        assert_eq!(closed_form_accuracy(k, TransitionRates::frozen(), 0.37), 0.37);
    }
}
