//! Error dynamics of iterative self-correction.
//!
//! Each problem's correctness is modelled as a two-state Markov chain over
//! {correct, incorrect} with an error introduction rate (EIR, correct to
//! incorrect) and an error correction rate (ECR, incorrect to correct). The
//! crate provides
//!
//! * [`dynamics`]: the exact accuracy recurrence, the stop-or-iterate
//!   verdict, the stationary accuracy and geometric convergence;
//! * [`sim`]: seeded population simulation plus analytic replay over
//!   [`schedule`] presets;
//! * [`estimate`]: EIR/ECR estimation from a [`log::CorrectnessLog`] with
//!   Wilson intervals;
//! * [`stats`]: McNemar's test and the paired bootstrap;
//! * [`asc`]: the adaptive self-correction stopping controller;
//! * [`baselines`]: self-consistency majority voting;
//! * [`logfile`] and [`report`]: file formats and table rendering used by the
//!   `refdyn` command-line tool.
//!
//! ```
//! use refdyn::dynamics::{stop_or_iterate, TransitionRates, VerdictTag};
//!
//! // 1.3% of correct answers break, nothing gets fixed: stop.
//! let rates = TransitionRates::new(0.013, 0.0)?;
//! assert_eq!(stop_or_iterate(0.912, rates).tag, VerdictTag::Stop);
//! # Ok::<(), refdyn::dynamics::RateError>(())
//! ```

pub mod asc;
pub mod baselines;
pub mod dynamics;
pub mod estimate;
pub mod log;
pub mod logfile;
pub mod report;
pub mod rng;
pub mod schedule;
pub mod sim;
pub mod stats;

pub use dynamics::{
    closed_form_accuracy, equilibrium_ratio, net_benefit, steady_state, step_accuracy,
    stop_or_iterate, subdominant_eigenvalue, AccuracyPoint, EquilibriumVerdict, ExtendedRatio,
    SteadyStateSummary, TransitionRates, VerdictTag,
};
pub use log::CorrectnessLog;
pub use schedule::{preset, RateSchedule};
pub use sim::{analytic_trajectory, simulate_population, SimConfig, SimTrajectory};
