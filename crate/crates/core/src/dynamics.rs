//! Closed-form dynamics of the two-state correctness chain.
//!
//! Every problem is either correct or incorrect. One refinement iteration
//! moves a correct answer to incorrect with probability EIR and an incorrect
//! answer to correct with probability ECR, so population accuracy follows
//!
//! ```text
//! Acc(k+1) = Acc(k) (1 - EIR) + (1 - Acc(k)) ECR
//! ```
//!
//! From that recurrence come the stop-or-iterate threshold
//! (`ECR/EIR > Acc/(1-Acc)`), the stationary accuracy `ECR/(EIR+ECR)` and
//! geometric convergence towards it with ratio `1 - EIR - ECR`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// |NB| at or below this is reported as equilibrium.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("{name} must be a probability in [0, 1], got {value}")]
    OutOfRange { name: &'static str, value: f64 },
}

/// One (EIR, ECR) pair governing a single refinement transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRates")]
pub struct TransitionRates {
    eir: f64,
    ecr: f64,
}

#[derive(Deserialize)]
struct RawRates {
    eir: f64,
    ecr: f64,
}

impl TryFrom<RawRates> for TransitionRates {
    type Error = RateError;

    fn try_from(raw: RawRates) -> Result<Self, Self::Error> {
        TransitionRates::new(raw.eir, raw.ecr)
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<f64, RateError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(RateError::OutOfRange { name, value })
    }
}

impl TransitionRates {
    pub fn new(eir: f64, ecr: f64) -> Result<Self, RateError> {
        Ok(Self {
            eir: check_probability("eir", eir)?,
            ecr: check_probability("ecr", ecr)?,
        })
    }

    /// Builds rates from percentages as printed in rate tables (`1.3` = 1.3%).
    pub fn from_percent(eir_pct: f64, ecr_pct: f64) -> Result<Self, RateError> {
        Self::new(eir_pct / 100.0, ecr_pct / 100.0)
    }

    /// The identity transition: nothing ever changes.
    pub const fn frozen() -> Self {
        Self { eir: 0.0, ecr: 0.0 }
    }

    pub fn eir(&self) -> f64 {
        self.eir
    }

    pub fn ecr(&self) -> f64 {
        self.ecr
    }

    /// Row-stochastic matrix over `[correct, incorrect]`.
    ///
    /// Row 0 is "currently correct", row 1 "currently incorrect".
    pub fn transition_matrix(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.eir, self.eir], [self.ecr, 1.0 - self.ecr]]
    }

    /// `EIR = ECR = 0`: every distribution is stationary.
    pub fn is_absorbing(&self) -> bool {
        self.eir == 0.0 && self.ecr == 0.0
    }

    /// `ECR / EIR` on the extended non-negative reals.
    pub fn correction_ratio(&self) -> ExtendedRatio {
        ExtendedRatio::quotient(self.ecr, self.eir)
    }
}

/// A non-negative ratio that may be `+inf` (`x/0` with `x > 0`) or
/// indeterminate (`0/0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedRatio {
    Finite(f64),
    Infinite,
    Indeterminate,
}

impl ExtendedRatio {
    pub fn quotient(numerator: f64, denominator: f64) -> Self {
        if denominator > 0.0 {
            ExtendedRatio::Finite(numerator / denominator)
        } else if numerator > 0.0 {
            ExtendedRatio::Infinite
        } else {
            ExtendedRatio::Indeterminate
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtendedRatio::Finite(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedRatio::Infinite)
    }
}

impl PartialOrd for ExtendedRatio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtendedRatio::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (Finite(_), Infinite) => Some(Ordering::Less),
            (Infinite, Finite(_)) => Some(Ordering::Greater),
            (Infinite, Infinite) => Some(Ordering::Equal),
            _ => None,
        }
    }
}

impl fmt::Display for ExtendedRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedRatio::Finite(v) => match f.precision() {
                Some(p) => write!(f, "{v:.p$}"),
                None => write!(f, "{v}"),
            },
            ExtendedRatio::Infinite => f.write_str("inf"),
            ExtendedRatio::Indeterminate => f.write_str("n/a"),
        }
    }
}

impl Serialize for ExtendedRatio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedRatio::Finite(v) => serializer.serialize_f64(*v),
            ExtendedRatio::Infinite => serializer.serialize_str("inf"),
            ExtendedRatio::Indeterminate => serializer.serialize_none(),
        }
    }
}

/// Population accuracy at one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyPoint {
    pub iteration: usize,
    pub accuracy: f64,
    /// `Acc(k) - Acc(k-1)`; absent at iteration 0.
    pub net_benefit: Option<f64>,
}

impl AccuracyPoint {
    /// Builds a series from raw accuracies, filling in net benefit.
    pub fn series(accuracies: &[f64]) -> Vec<AccuracyPoint> {
        accuracies
            .iter()
            .enumerate()
            .map(|(k, &accuracy)| AccuracyPoint {
                iteration: k,
                accuracy,
                net_benefit: k.checked_sub(1).map(|prev| accuracy - accuracies[prev]),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictTag {
    Iterate,
    Stop,
    AtEquilibrium,
}

impl fmt::Display for VerdictTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictTag::Iterate => "iterate",
            VerdictTag::Stop => "stop",
            VerdictTag::AtEquilibrium => "at-equilibrium",
        })
    }
}

/// Outcome of comparing `ECR/EIR` against `Acc/(1-Acc)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumVerdict {
    pub tag: VerdictTag,
    /// `ECR / EIR`.
    pub lhs: ExtendedRatio,
    /// `Acc / (1 - Acc)`.
    pub rhs: ExtendedRatio,
    pub net_benefit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyStateSummary {
    /// `ECR / (EIR + ECR)`; `None` for absorbing rates.
    pub pi_star: Option<f64>,
    pub lambda2: f64,
    pub absorbing: bool,
}

/// One application of the accuracy recurrence.
pub fn step_accuracy(acc: f64, rates: TransitionRates) -> f64 {
    debug_assert!((0.0..=1.0).contains(&acc), "accuracy {acc} outside [0, 1]");
    acc * (1.0 - rates.eir) + (1.0 - acc) * rates.ecr
}

/// Change in accuracy produced by one more iteration at these rates.
pub fn net_benefit(acc: f64, rates: TransitionRates) -> f64 {
    // Algebraically equal to step_accuracy(acc) - acc, but without the
    // cancellation when both are close to 1.
    (1.0 - acc) * rates.ecr - acc * rates.eir
}

/// `Acc / (1 - Acc)`, the correction-to-introduction ratio needed to break even.
pub fn equilibrium_ratio(acc: f64) -> ExtendedRatio {
    debug_assert!((0.0..=1.0).contains(&acc), "accuracy {acc} outside [0, 1]");
    ExtendedRatio::quotient(acc, 1.0 - acc)
}

/// Stop-or-iterate diagnostic: iterate only when `ECR/EIR > Acc/(1-Acc)`.
///
/// The tag is decided from the net benefit (equilibrium within
/// [`EQUILIBRIUM_TOLERANCE`]), so `inf` vs `inf` never has to be compared.
pub fn stop_or_iterate(acc: f64, rates: TransitionRates) -> EquilibriumVerdict {
    let nb = net_benefit(acc, rates);
    let tag = if nb.abs() <= EQUILIBRIUM_TOLERANCE {
        VerdictTag::AtEquilibrium
    } else if nb > 0.0 {
        VerdictTag::Iterate
    } else {
        VerdictTag::Stop
    };
    EquilibriumVerdict {
        tag,
        lhs: rates.correction_ratio(),
        rhs: equilibrium_ratio(acc),
        net_benefit: nb,
    }
}

pub fn subdominant_eigenvalue(rates: TransitionRates) -> f64 {
    1.0 - rates.eir - rates.ecr
}

pub fn steady_state(rates: TransitionRates) -> SteadyStateSummary {
    let absorbing = rates.is_absorbing();
    SteadyStateSummary {
        pi_star: (!absorbing).then(|| rates.ecr / (rates.eir + rates.ecr)),
        lambda2: subdominant_eigenvalue(rates),
        absorbing,
    }
}

/// `Acc(k) = pi* + lambda2^k (Acc(0) - pi*)` under stationary rates.
///
/// Absorbing rates leave the accuracy at `acc0` for every `k`.
pub fn closed_form_accuracy(k: u32, rates: TransitionRates, acc0: f64) -> f64 {
    match steady_state(rates).pi_star {
        None => acc0,
        Some(_) if k == 0 => acc0,
        Some(pi) => {
            let lambda = subdominant_eigenvalue(rates);
            pi + lambda.powi(k as i32) * (acc0 - pi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rates(eir: f64, ecr: f64) -> TransitionRates {
        TransitionRates::new(eir, ecr).unwrap()
    }

    #[test]
    fn rejects_out_of_range_rates() {
        assert!(TransitionRates::new(-0.01, 0.2).is_err());
        assert!(TransitionRates::new(0.2, 1.5).is_err());
        assert!(TransitionRates::new(f64::NAN, 0.2).is_err());
        assert!(serde_json::from_str::<TransitionRates>(r#"{"eir":2.0,"ecr":0.1}"#).is_err());
    }

    #[test]
    fn matrix_rows_sum_to_one() {
        for (e, c) in [(0.013, 0.0), (0.3, 0.7), (1.0, 1.0), (0.0, 0.0)] {
            let m = rates(e, c).transition_matrix();
            assert_eq!(m[0][0] + m[0][1], 1.0);
            assert_eq!(m[1][0] + m[1][1], 1.0);
        }
    }

    #[test]
    fn step_accuracy_examples() {
        assert_abs_diff_eq!(step_accuracy(0.912, rates(0.013, 0.0)), 0.900144, epsilon = 1e-12);
        assert_eq!(step_accuracy(0.5, TransitionRates::frozen()), 0.5);
        assert_abs_diff_eq!(step_accuracy(0.866, rates(0.021, 0.015)), 0.849824, epsilon = 1e-12);
    }

    #[test]
    fn net_benefit_examples() {
        assert_abs_diff_eq!(net_benefit(0.912, rates(0.013, 0.0)), -0.011856, epsilon = 1e-12);
        assert_abs_diff_eq!(net_benefit(0.5, rates(0.1, 0.3)), 0.10, epsilon = 1e-12);
        for acc in [0.1, 0.5, 0.912, 0.99] {
            let e = 0.01;
            let nb = net_benefit(acc, rates(e, e * acc / (1.0 - acc)));
            assert!(nb.abs() <= EQUILIBRIUM_TOLERANCE, "acc={acc} nb={nb}");
        }
    }

    #[test]
    fn equilibrium_ratio_examples() {
        assert_abs_diff_eq!(equilibrium_ratio(0.896).finite().unwrap(), 0.896 / 0.104, epsilon = 1e-12);
        assert_abs_diff_eq!(equilibrium_ratio(0.976).finite().unwrap(), 40.666_666_666_666_67, epsilon = 1e-9);
        assert_eq!(equilibrium_ratio(0.5), ExtendedRatio::Finite(1.0));
        assert_eq!(equilibrium_ratio(1.0), ExtendedRatio::Infinite);
    }

    #[test]
    fn stop_or_iterate_examples() {
        let v = stop_or_iterate(0.896, rates(0.02, 0.02));
        assert_eq!(v.tag, VerdictTag::Stop);
        assert_eq!(v.lhs, ExtendedRatio::Finite(1.0));

        let v = stop_or_iterate(0.93, rates(0.0, 0.441));
        assert_eq!(v.tag, VerdictTag::Iterate);
        assert!(v.lhs.is_infinite());

        let v = stop_or_iterate(0.976, rates(0.002, 0.25));
        assert_eq!(v.tag, VerdictTag::Iterate);
        assert_abs_diff_eq!(v.lhs.finite().unwrap(), 125.0, epsilon = 1e-9);
    }

    #[test]
    fn frozen_rates_are_at_equilibrium_everywhere() {
        for acc in [0.0, 0.3, 1.0] {
            let v = stop_or_iterate(acc, TransitionRates::frozen());
            assert_eq!(v.tag, VerdictTag::AtEquilibrium);
            assert_eq!(v.lhs, ExtendedRatio::Indeterminate);
        }
    }

    #[test]
    fn boundary_accuracies() {
        // Perfect accuracy with zero EIR cannot move.
        assert_eq!(stop_or_iterate(1.0, rates(0.0, 0.3)).tag, VerdictTag::AtEquilibrium);
        assert_eq!(stop_or_iterate(1.0, rates(0.01, 0.3)).tag, VerdictTag::Stop);
        assert_eq!(stop_or_iterate(0.0, rates(0.2, 0.0)).tag, VerdictTag::AtEquilibrium);
        assert_eq!(stop_or_iterate(0.0, rates(0.2, 0.01)).tag, VerdictTag::Iterate);
    }

    #[test]
    fn extended_ratio_ordering() {
        use ExtendedRatio::*;
        assert!(Finite(1e300) < Infinite);
        assert!(Infinite > Finite(0.0));
        assert_eq!(Infinite.partial_cmp(&Infinite), Some(Ordering::Equal));
        assert_eq!(Indeterminate.partial_cmp(&Finite(1.0)), None);
        assert_eq!(serde_json::to_string(&Infinite).unwrap(), "\"inf\"");
    }

    #[test]
    fn steady_state_examples() {
        assert_eq!(steady_state(rates(0.02, 0.02)).pi_star, Some(0.5));
        assert_abs_diff_eq!(
            steady_state(rates(0.0202, 0.02325)).pi_star.unwrap(),
            0.535_097,
            epsilon = 1e-6
        );
        let frozen = steady_state(TransitionRates::frozen());
        assert!(frozen.absorbing);
        assert_eq!(frozen.pi_star, None);
        assert_eq!(frozen.lambda2, 1.0);
    }

    #[test]
    fn subdominant_eigenvalue_examples() {
        assert_abs_diff_eq!(subdominant_eigenvalue(rates(0.05, 0.15)), 0.8, epsilon = 1e-15);
        assert_eq!(subdominant_eigenvalue(rates(0.0, 0.0)), 1.0);
        assert_eq!(subdominant_eigenvalue(rates(1.0, 1.0)), -1.0);
    }

    #[test]
    fn closed_form_examples() {
        let r = rates(0.05, 0.15);
        assert_eq!(closed_form_accuracy(0, r, 0.37), 0.37);
        let mut acc = 0.5;
        for _ in 0..3 {
            acc = step_accuracy(acc, r);
        }
        assert_abs_diff_eq!(acc, 0.622, epsilon = 1e-12);
        assert_abs_diff_eq!(closed_form_accuracy(3, r, 0.5), acc, epsilon = 1e-12);
        assert_abs_diff_eq!(closed_form_accuracy(200, rates(0.1, 0.3), 0.2), 0.75, epsilon = 1e-9);
        assert_eq!(closed_form_accuracy(17, TransitionRates::frozen(), 0.42), 0.42);
    }

    #[test]
    fn period_two_flip() {
        let r = rates(1.0, 1.0);
        assert_abs_diff_eq!(closed_form_accuracy(1, r, 0.9), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(closed_form_accuracy(2, r, 0.9), 0.9, epsilon = 1e-15);
    }

    #[test]
    fn accuracy_series_carries_net_benefit() {
        let s = AccuracyPoint::series(&[0.9, 0.85, 0.87]);
        assert_eq!(s[0].net_benefit, None);
        assert_abs_diff_eq!(s[1].net_benefit.unwrap(), -0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(s[2].net_benefit.unwrap(), 0.02, epsilon = 1e-15);
    }
}
