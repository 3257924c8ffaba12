//! Adaptive self-correction: refine until the model is confident, the batch
//! reaches equilibrium, or the iteration budget runs out.
//!
//! Per instance the controller runs
//!
//! ```text
//! r0 = generate(q); g0 = confidence(q, r0)
//! if g0 >= tau: return r0, 0
//! for k in 1..=K:
//!     rk = refine(q, r(k-1)); gk = confidence(q, rk)
//!     if gk >= tau:        return rk, k         (confidence)
//!     if EIR_hat >= ECR_hat: return r(k-1), k-1   (equilibrium)
//! return rK, K                                   (budget)
//! ```
//!
//! The running `EIR_hat`/`ECR_hat` come from an [`EquilibriumMode`]: fixed
//! rates measured on a labelled calibration log, rates pooled online from
//! labelled transitions of the batch being processed, or nothing at all.
//! Batches advance in lockstep rounds so "running" is well defined: every
//! active instance takes refinement `k`, then the pooled rates are updated,
//! then every instance applies its stopping checks.

mod scripted;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::TransitionRates;
use crate::estimate::{count_columns, running_pooled_rates, EstimateError, PooledRates, TransitionCounts};
use crate::log::{CorrectnessLog, LogError};
use crate::stats::{self, BootstrapDelta, McNemarResult, StatError};

pub use scripted::{Scenario, ScenarioError, ScenarioProblem, ScenarioStep, ScriptedBackend};

pub const DEFAULT_TAU: f64 = 8.0;
pub const DEFAULT_MAX_ITERATIONS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    #[serde(default)]
    pub question: String,
}

impl Problem {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into(), question: String::new() }
    }
}

/// Opaque answer token; two answers agree iff the tokens are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Answer(pub String);

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct BackendError(pub String);

/// What a model adapter must provide.
///
/// Confidence scores are on the 1-10 scale; parsing them out of free text
/// is the adapter's job.
pub trait RefinementBackend {
    fn generate(&mut self, problem: &Problem) -> Result<Answer, BackendError>;
    fn refine(&mut self, problem: &Problem, previous: &Answer) -> Result<Answer, BackendError>;
    fn confidence(&mut self, problem: &Problem, answer: &Answer) -> Result<f64, BackendError>;
}

/// Ground truth for online rate estimation.
pub trait Labeler {
    /// `None` when the answer cannot be labelled.
    fn is_correct(&self, problem: &Problem, answer: &Answer) -> Option<bool>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumMode {
    /// Fixed rates from a labelled calibration log.
    CalibrationOnly,
    /// Rates pooled from labelled transitions as the batch runs.
    OnlineLabeled,
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AscConfig {
    pub tau: f64,
    pub max_iterations: usize,
    pub calibration_rates: Option<TransitionRates>,
    pub equilibrium_mode: EquilibriumMode,
}

impl Default for AscConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            calibration_rates: None,
            equilibrium_mode: EquilibriumMode::Disabled,
        }
    }
}

impl AscConfig {
    pub fn calibrated(rates: TransitionRates) -> Self {
        Self {
            calibration_rates: Some(rates),
            equilibrium_mode: EquilibriumMode::CalibrationOnly,
            ..Self::default()
        }
    }

    /// Calibration from the count-pooled rates of every transition in `log`.
    pub fn calibrated_from_log(log: &CorrectnessLog) -> Result<Self, AscError> {
        let k = log.n_iterations();
        if k == 0 {
            return Err(AscError::Config("calibration log has no transitions".into()));
        }
        let pooled = running_pooled_rates(log, k - 1)?;
        let (Some(eir), Some(ecr)) = (pooled.eir, pooled.ecr) else {
            return Err(AscError::Config(
                "calibration log leaves EIR or ECR undefined (an empty correct or incorrect pool)".into(),
            ));
        };
        Ok(Self::calibrated(TransitionRates::new(eir, ecr).expect("ratios of counts are probabilities")))
    }

    pub fn validate(&self) -> Result<(), AscError> {
        if !(1.0..=10.0).contains(&self.tau) {
            return Err(AscError::Config(format!("tau must lie in [1, 10], got {}", self.tau)));
        }
        if self.max_iterations == 0 {
            return Err(AscError::Config("max_iterations must be at least 1".into()));
        }
        if self.equilibrium_mode == EquilibriumMode::CalibrationOnly && self.calibration_rates.is_none() {
            return Err(AscError::Config("calibration-only equilibrium mode needs calibration rates".into()));
        }
        Ok(())
    }
}

/// Running rate estimates seen by the equilibrium check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RateSignal {
    pub eir: Option<f64>,
    pub ecr: Option<f64>,
}

impl RateSignal {
    /// `EIR_hat >= ECR_hat`; never true while either estimate is undefined.
    pub fn equilibrium_reached(&self) -> bool {
        matches!((self.eir, self.ecr), (Some(e), Some(c)) if e >= c)
    }
}

impl From<PooledRates> for RateSignal {
    fn from(p: PooledRates) -> Self {
        Self { eir: p.eir, ecr: p.ecr }
    }
}

impl From<TransitionRates> for RateSignal {
    fn from(r: TransitionRates) -> Self {
        Self { eir: Some(r.eir()), ecr: Some(r.ecr()) }
    }
}

/// Source of running estimates for [`run_asc_instance`] in online mode.
pub trait EquilibriumFeed {
    /// Estimates available once refinement `k` (k >= 1) has been applied.
    fn running_rates(&self, k: usize) -> RateSignal;
}

/// A feed that never has estimates.
pub struct NoFeed;

impl EquilibriumFeed for NoFeed {
    fn running_rates(&self, _k: usize) -> RateSignal {
        RateSignal::default()
    }
}

impl EquilibriumFeed for RateSignal {
    fn running_rates(&self, _k: usize) -> RateSignal {
        *self
    }
}

/// Per-round estimates, e.g. replayed from an earlier batch.
impl EquilibriumFeed for Vec<RateSignal> {
    fn running_rates(&self, k: usize) -> RateSignal {
        self.get(k.wrapping_sub(1)).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Confidence,
    Equilibrium,
    Budget,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Confidence => "confidence",
            StopReason::Equilibrium => "equilibrium",
            StopReason::Budget => "budget",
        })
    }
}

/// One backend call, in the order issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "call", content = "iteration", rename_all = "snake_case")]
pub enum BackendCall {
    Generate,
    Refine(usize),
    Confidence(usize),
}

impl fmt::Display for BackendCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendCall::Generate => f.write_str("generate"),
            BackendCall::Refine(k) => write!(f, "refine({k})"),
            BackendCall::Confidence(k) => write!(f, "confidence({k})"),
        }
    }
}

/// Whatever had happened before a failure.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PartialTrace {
    pub calls: Vec<BackendCall>,
    pub answers: Vec<Answer>,
    pub confidence_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AscOutcome {
    pub problem_id: String,
    pub final_answer: Answer,
    /// Index of the returned response.
    pub iterations_used: usize,
    pub stop_reason: StopReason,
    /// Number of refine calls issued (one more than `iterations_used` on an
    /// equilibrium stop).
    pub refine_calls: usize,
    pub confidence_trace: Vec<f64>,
    pub answers: Vec<Answer>,
    pub calls: Vec<BackendCall>,
}

impl AscOutcome {
    /// The call sequence as a single line, e.g. `generate confidence(0) refine(1) ...`.
    pub fn call_trace(&self) -> String {
        self.calls.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AscError {
    #[error("invalid ASC configuration: {0}")]
    Config(String),
    #[error("backend failed on problem '{problem_id}': {source}")]
    Backend {
        problem_id: String,
        #[source]
        source: BackendError,
        partial: PartialTrace,
    },
    #[error("no label for problem '{problem_id}' at iteration {iteration} in online-labelled mode")]
    MissingLabel { problem_id: String, iteration: usize },
    #[error("an ASC batch needs at least one problem")]
    EmptyBatch,
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

enum Phase {
    Active,
    Done(StopReason, usize),
}

/// State of one problem moving through the controller.
struct Instance<'p> {
    problem: &'p Problem,
    trace: PartialTrace,
    phase: Phase,
}

impl<'p> Instance<'p> {
    fn fail(&self, source: BackendError) -> AscError {
        AscError::Backend { problem_id: self.problem.id.clone(), source, partial: self.trace.clone() }
    }

    fn score<B: RefinementBackend + ?Sized>(&mut self, backend: &mut B, k: usize) -> Result<f64, AscError> {
        self.trace.calls.push(BackendCall::Confidence(k));
        let answer = self.trace.answers.last().expect("an answer exists before scoring");
        let g = backend.confidence(self.problem, answer).map_err(|e| self.fail(e))?;
        if !(1.0..=10.0).contains(&g) {
            return Err(self.fail(BackendError(format!("confidence {g} outside [1, 10]"))));
        }
        self.trace.confidence_trace.push(g);
        Ok(g)
    }

    fn start<B: RefinementBackend + ?Sized>(
        problem: &'p Problem,
        backend: &mut B,
        config: &AscConfig,
    ) -> Result<Self, AscError> {
        let mut inst = Instance { problem, trace: PartialTrace::default(), phase: Phase::Active };
        inst.trace.calls.push(BackendCall::Generate);
        let r0 = backend.generate(problem).map_err(|e| inst.fail(e))?;
        inst.trace.answers.push(r0);
        if inst.score(backend, 0)? >= config.tau {
            inst.phase = Phase::Done(StopReason::Confidence, 0);
        }
        Ok(inst)
    }

    fn is_active(&self) -> bool {
        matches!(self.phase, Phase::Active)
    }

    /// Refinement `k` followed by its confidence score.
    fn refine<B: RefinementBackend + ?Sized>(&mut self, backend: &mut B, k: usize) -> Result<(), AscError> {
        self.trace.calls.push(BackendCall::Refine(k));
        let prev = self.trace.answers.last().expect("r(k-1) exists");
        let rk = backend.refine(self.problem, prev).map_err(|e| self.fail(e))?;
        self.trace.answers.push(rk);
        self.score(backend, k)?;
        Ok(())
    }

    /// Stopping checks after refinement `k`: confidence first, then equilibrium, then budget.
    fn decide(&mut self, k: usize, config: &AscConfig, signal: RateSignal) {
        let gk = *self.trace.confidence_trace.last().expect("scored");
        self.phase = if gk >= config.tau {
            Phase::Done(StopReason::Confidence, k)
        } else if config.equilibrium_mode != EquilibriumMode::Disabled && signal.equilibrium_reached() {
            Phase::Done(StopReason::Equilibrium, k - 1)
        } else if k == config.max_iterations {
            Phase::Done(StopReason::Budget, k)
        } else {
            Phase::Active
        };
    }

    fn finish(self) -> AscOutcome {
        let Phase::Done(stop_reason, iterations_used) = self.phase else {
            unreachable!("finish called on an active instance")
        };
        let refine_calls = self.trace.answers.len() - 1;
        AscOutcome {
            problem_id: self.problem.id.clone(),
            final_answer: self.trace.answers[iterations_used].clone(),
            iterations_used,
            stop_reason,
            refine_calls,
            confidence_trace: self.trace.confidence_trace,
            answers: self.trace.answers,
            calls: self.trace.calls,
        }
    }
}

fn fixed_signal(config: &AscConfig) -> Option<RateSignal> {
    match config.equilibrium_mode {
        EquilibriumMode::CalibrationOnly => config.calibration_rates.map(RateSignal::from),
        EquilibriumMode::Disabled => Some(RateSignal::default()),
        EquilibriumMode::OnlineLabeled => None,
    }
}

/// Runs the controller on one problem.
///
/// `feed` is consulted only in [`EquilibriumMode::OnlineLabeled`]; the
/// other modes take their estimates from `config`.
pub fn run_asc_instance<B: RefinementBackend + ?Sized>(
    problem: &Problem,
    backend: &mut B,
    config: &AscConfig,
    feed: &dyn EquilibriumFeed,
) -> Result<AscOutcome, AscError> {
    config.validate()?;
    let fixed = fixed_signal(config);
    let mut inst = Instance::start(problem, backend, config)?;
    for k in 1..=config.max_iterations {
        if !inst.is_active() {
            break;
        }
        inst.refine(backend, k)?;
        inst.decide(k, config, fixed.unwrap_or_else(|| feed.running_rates(k)));
    }
    Ok(inst.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Instances refined in this round.
    pub refined: usize,
    pub signal: RateSignal,
    /// Labelled transitions pooled so far (online mode only).
    pub pooled_counts: Option<TransitionCounts>,
    pub equilibrium_stops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub n_problems: usize,
    /// `iterations_used -> number of problems`.
    pub iterations_histogram: BTreeMap<usize, usize>,
    pub stop_reasons: BTreeMap<StopReason, usize>,
    pub refine_calls: usize,
    pub rounds: Vec<RoundRecord>,
    /// Share of final answers labelled correct, when a labeler was given.
    pub final_accuracy: Option<f64>,
    /// Round in which an equilibrium stop first fired.
    pub first_equilibrium_round: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AscBatch {
    pub outcomes: Vec<AscOutcome>,
    pub summary: BatchSummary,
}

fn label(labeler: &dyn Labeler, problem: &Problem, answer: &Answer, iteration: usize) -> Result<bool, AscError> {
    labeler
        .is_correct(problem, answer)
        .ok_or_else(|| AscError::MissingLabel { problem_id: problem.id.clone(), iteration })
}

/// Runs a batch in lockstep rounds.
pub fn run_asc_batch<B: RefinementBackend + ?Sized>(
    problems: &[Problem],
    backend: &mut B,
    config: &AscConfig,
    labeler: Option<&dyn Labeler>,
) -> Result<AscBatch, AscError> {
    config.validate()?;
    if problems.is_empty() {
        return Err(AscError::EmptyBatch);
    }
    let online = config.equilibrium_mode == EquilibriumMode::OnlineLabeled;
    if online && labeler.is_none() {
        return Err(AscError::Config("online-labelled equilibrium mode needs correctness labels".into()));
    }
    let fixed = fixed_signal(config);

    let mut instances = problems
        .iter()
        .map(|p| Instance::start(p, backend, config))
        .collect::<Result<Vec<_>, _>>()?;

    let mut pooled = TransitionCounts::default();
    let mut rounds = Vec::new();
    for k in 1..=config.max_iterations {
        let active: Vec<usize> = (0..instances.len()).filter(|&i| instances[i].is_active()).collect();
        if active.is_empty() {
            break;
        }
        for &i in &active {
            instances[i].refine(backend, k)?;
        }
        let signal = match fixed {
            Some(s) => s,
            None => {
                let labeler = labeler.expect("checked at startup");
                let mut before = Vec::with_capacity(active.len());
                let mut after = Vec::with_capacity(active.len());
                for &i in &active {
                    let inst = &instances[i];
                    before.push(label(labeler, inst.problem, &inst.trace.answers[k - 1], k - 1)?);
                    after.push(label(labeler, inst.problem, &inst.trace.answers[k], k)?);
                }
                pooled = pooled + count_columns(&before, &after);
                PooledRates::from_counts(pooled).into()
            }
        };
        for &i in &active {
            instances[i].decide(k, config, signal);
        }
        let equilibrium_stops = active
            .iter()
            .filter(|&&i| matches!(instances[i].phase, Phase::Done(StopReason::Equilibrium, _)))
            .count();
        rounds.push(RoundRecord {
            round: k,
            refined: active.len(),
            signal,
            pooled_counts: online.then_some(pooled),
            equilibrium_stops,
        });
    }

    let outcomes: Vec<AscOutcome> = instances.into_iter().map(Instance::finish).collect();
    let mut iterations_histogram = BTreeMap::new();
    let mut stop_reasons = BTreeMap::new();
    for o in &outcomes {
        *iterations_histogram.entry(o.iterations_used).or_insert(0) += 1;
        *stop_reasons.entry(o.stop_reason).or_insert(0) += 1;
    }
    let final_accuracy = match labeler {
        Some(l) => {
            let mut correct = 0usize;
            let mut labelled = 0usize;
            for (p, o) in problems.iter().zip(&outcomes) {
                if let Some(c) = l.is_correct(p, &o.final_answer) {
                    labelled += 1;
                    correct += c as usize;
                }
            }
            (labelled == outcomes.len()).then(|| correct as f64 / labelled as f64)
        }
        None => None,
    };
    let summary = BatchSummary {
        n_problems: outcomes.len(),
        iterations_histogram,
        stop_reasons,
        refine_calls: outcomes.iter().map(|o| o.refine_calls).sum(),
        first_equilibrium_round: rounds.iter().find(|r| r.equilibrium_stops > 0).map(|r| r.round),
        rounds,
        final_accuracy,
    };
    Ok(AscBatch { outcomes, summary })
}

/// Accuracy cost of eliciting confidence, measured at iteration 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceTax {
    pub accuracy_with: f64,
    pub accuracy_without: f64,
    /// `with - without`, percentage points.
    pub delta_pp: f64,
    pub mcnemar: McNemarResult,
    pub bootstrap: BootstrapDelta,
}

#[derive(Debug, Error)]
pub enum TaxError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Stat(#[from] StatError),
}

/// Compares iteration-0 accuracy of a run that asked for confidence against
/// one that did not, on the same problems.
pub fn confidence_tax_report(
    with_confidence_prompt: &CorrectnessLog,
    without: &CorrectnessLog,
    resamples: usize,
    seed: u64,
) -> Result<ConfidenceTax, TaxError> {
    without.ensure_aligned(with_confidence_prompt)?;
    let base = without.column(0)?;
    let elicited = with_confidence_prompt.column(0)?;
    let bootstrap = stats::paired_bootstrap_delta(&base, &elicited, resamples, seed)?;
    Ok(ConfidenceTax {
        accuracy_with: with_confidence_prompt.accuracy(0)?,
        accuracy_without: without.accuracy(0)?,
        delta_pp: bootstrap.delta_hat,
        mcnemar: stats::mcnemar_columns(&base, &elicited)?,
        bootstrap,
    })
}
