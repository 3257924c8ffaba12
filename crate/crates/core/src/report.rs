//! Diagnostic reports over one or more correctness logs, and their rendering
//! as aligned text tables, CSV and JSON.
//!
//! Display tables round to one decimal of a percent. CSV and JSON carry the
//! full `f64` (shortest representation that reads back to the same value).

use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{
    closed_form_accuracy, steady_state, stop_or_iterate, EquilibriumVerdict, SteadyStateSummary, TransitionRates,
};
use crate::estimate::{estimate_rates_at, EstimateError, RateEstimate, RateEstimates, DEFAULT_CONFIDENCE};
use crate::log::{CorrectnessLog, LogError};
use crate::stats::{self, BootstrapDelta, McNemarResult, StatError, DEFAULT_ALPHA, DEFAULT_RESAMPLES};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Stat(#[from] StatError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("run '{0}' has no refinement iterations; a report needs K >= 1")]
    NoTransitions(String),
}

/// Thresholds of the two-tier classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Half-width of the non-degrading band, percentage points.
    pub band_pp: f64,
    /// Largest pooled EIR still counted as suppressed (a probability).
    pub max_eir: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { band_pp: 0.5, max_eir: 0.005 }
    }
}

// Accuracy differences come out of count ratios; keep 0.5 pp from flipping
// on the last bit.
const BAND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Harmful,
    #[serde(rename = "tier-1-non-degrading")]
    NonDegrading,
    #[serde(rename = "tier-2-beneficial")]
    Beneficial,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Harmful => "harmful",
            Classification::NonDegrading => "tier-1 non-degrading",
            Classification::Beneficial => "tier-2 beneficial",
        })
    }
}

/// Tier 2 needs a gain beyond the band; tier 1 needs a change inside the
/// band together with suppressed EIR. Everything else is harmful.
///
/// An undefined pooled EIR (no correct answers ever) counts as suppressed.
pub fn classify(delta_pp: f64, pooled_eir: Option<f64>, thresholds: Thresholds) -> Classification {
    let band = thresholds.band_pp + BAND_SLACK;
    if delta_pp > band {
        Classification::Beneficial
    } else if delta_pp.abs() <= band && pooled_eir.unwrap_or(0.0) <= thresholds.max_eir {
        Classification::NonDegrading
    } else {
        Classification::Harmful
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportConfig {
    pub confidence: f64,
    pub alpha: f64,
    pub resamples: usize,
    pub seed: u64,
    pub thresholds: Thresholds,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            confidence: DEFAULT_CONFIDENCE,
            alpha: DEFAULT_ALPHA,
            resamples: DEFAULT_RESAMPLES,
            seed: 0,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionVerdict {
    pub transition: usize,
    pub accuracy: f64,
    pub verdict: EquilibriumVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateReport {
    pub rates: TransitionRates,
    pub summary: SteadyStateSummary,
    /// Closed-form accuracy after K iterations from the observed Acc(0).
    pub predicted_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McNemarRow {
    pub from: usize,
    pub to: usize,
    pub result: McNemarResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub label: String,
    pub model: Option<String>,
    pub prompt: Option<String>,
    pub n_problems: usize,
    pub accuracies: Vec<f64>,
    /// Final minus initial accuracy, percentage points.
    pub delta_pp: f64,
    pub rates: RateEstimates,
    pub verdicts: Vec<TransitionVerdict>,
    pub steady_state: SteadyStateReport,
    /// Adjacent iterations, then first against last when K > 1.
    pub mcnemar: Vec<McNemarRow>,
    /// Last iteration against the first.
    pub bootstrap: BootstrapDelta,
    pub classification: Classification,
}

/// Two runs of one model under different prompts, compared at their final iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedComparison {
    pub model: String,
    pub baseline: String,
    pub variant: String,
    pub iteration: usize,
    /// `variant - baseline`, percentage points.
    pub delta_pp: f64,
    pub mcnemar: McNemarResult,
    pub bootstrap: BootstrapDelta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub config: ReportConfig,
    pub runs: Vec<RunReport>,
    pub paired: Vec<PairedComparison>,
}

/// A rate that is undefined because its pool is empty contributes nothing to
/// the next step, so zero stands in for it.
fn usable(r: &RateEstimate) -> f64 {
    r.value.unwrap_or(0.0)
}

fn rates_of(eir: &RateEstimate, ecr: &RateEstimate) -> TransitionRates {
    TransitionRates::new(usable(eir), usable(ecr)).expect("estimated rates are probabilities")
}

fn label_for(log: &CorrectnessLog, index: usize) -> String {
    log.run_label()
        .map(str::to_string)
        .or_else(|| log.metadata.get("model").cloned())
        .unwrap_or_else(|| format!("run{index}"))
}

fn run_report(log: &CorrectnessLog, index: usize, config: &ReportConfig) -> Result<RunReport, ReportError> {
    let label = label_for(log, index);
    let k = log.n_iterations();
    if k == 0 {
        return Err(ReportError::NoTransitions(label));
    }
    let rates = estimate_rates_at(log, config.confidence)?;
    let accuracies = log.accuracies();
    let verdicts = rates
        .per_transition
        .iter()
        .map(|t| TransitionVerdict {
            transition: t.transition,
            accuracy: accuracies[t.transition],
            verdict: stop_or_iterate(accuracies[t.transition], rates_of(&t.eir, &t.ecr)),
        })
        .collect();
    let pooled = rates_of(&rates.pooled_eir, &rates.pooled_ecr);
    let steady_state = SteadyStateReport {
        rates: pooled,
        summary: steady_state(pooled),
        predicted_final: closed_form_accuracy(k as u32, pooled, accuracies[0]),
    };

    let mut pairs: Vec<(usize, usize)> = (0..k).map(|t| (t, t + 1)).collect();
    if k > 1 {
        pairs.push((0, k));
    }
    let mut mcnemar = Vec::with_capacity(pairs.len());
    for (from, to) in pairs {
        let r = stats::mcnemar_columns(&log.column(from)?, &log.column(to)?)?;
        mcnemar.push(McNemarRow { from, to, result: stats::mcnemar_at(r.b, r.c, config.alpha) });
    }
    let bootstrap = stats::paired_bootstrap_delta_at(
        &log.column(0)?,
        &log.column(k)?,
        config.resamples,
        config.seed,
        config.confidence,
    )?;
    let delta_pp = 100.0 * (accuracies[k] - accuracies[0]);
    Ok(RunReport {
        classification: classify(delta_pp, rates.pooled_eir.value, config.thresholds),
        model: log.metadata.get("model").cloned(),
        prompt: log.metadata.get("prompt").cloned(),
        n_problems: log.n_problems(),
        delta_pp,
        accuracies,
        rates,
        verdicts,
        steady_state,
        mcnemar,
        bootstrap,
        label,
    })
}

/// Pairs every later run of a model with the first run of that model,
/// when both carry a `model` label and share problem ids and K.
fn paired_comparisons(
    logs: &[CorrectnessLog],
    runs: &[RunReport],
    config: &ReportConfig,
) -> Result<Vec<PairedComparison>, ReportError> {
    let mut out = Vec::new();
    for (j, later) in runs.iter().enumerate() {
        let Some(model) = &later.model else { continue };
        let Some(i) = runs[..j].iter().position(|r| r.model.as_ref() == Some(model)) else { continue };
        let (a, b) = (&logs[i], &logs[j]);
        if a.ensure_aligned(b).is_err() || a.n_iterations() != b.n_iterations() {
            continue;
        }
        let k = a.n_iterations();
        let (ca, cb) = (a.column(k)?, b.column(k)?);
        let r = stats::mcnemar_columns(&ca, &cb)?;
        out.push(PairedComparison {
            model: model.clone(),
            baseline: runs[i].label.clone(),
            variant: later.label.clone(),
            iteration: k,
            delta_pp: 100.0 * (b.accuracy(k)? - a.accuracy(k)?),
            mcnemar: stats::mcnemar_at(r.b, r.c, config.alpha),
            bootstrap: stats::paired_bootstrap_delta_at(&ca, &cb, config.resamples, config.seed, config.confidence)?,
        });
    }
    Ok(out)
}

pub fn build_report(logs: &[CorrectnessLog], config: &ReportConfig) -> Result<DiagnosticReport, ReportError> {
    let runs = logs
        .iter()
        .enumerate()
        .map(|(i, log)| run_report(log, i, config))
        .collect::<Result<Vec<_>, _>>()?;
    let paired = paired_comparisons(logs, &runs, config)?;
    Ok(DiagnosticReport { config: *config, runs, paired })
}

/// One-decimal percent, e.g. `91.2`.
pub fn pct(p: f64) -> String {
    format!("{:.1}", 100.0 * p)
}

/// Signed one-decimal value; zero prints unsigned.
pub fn signed_pp(pp: f64) -> String {
    let s = format!("{pp:+.1}");
    if s == "+0.0" || s == "-0.0" {
        "0.0".to_string()
    } else {
        s
    }
}

fn rate_pct(r: &RateEstimate) -> String {
    r.value.map_or_else(|| "n/a".to_string(), pct)
}

fn max_iterations(report: &DiagnosticReport) -> usize {
    report.runs.iter().map(|r| r.accuracies.len()).max().unwrap_or(0)
}

fn label_width(report: &DiagnosticReport) -> usize {
    report.runs.iter().map(|r| r.label.len()).max().unwrap_or(0).max(3)
}

/// `91.2 90.0 89.6 86.6 85.0 Δ -6.2`
pub fn accuracy_row(run: &RunReport) -> String {
    let cells: Vec<String> = run.accuracies.iter().map(|&a| pct(a)).collect();
    format!("{} Δ {}", cells.join(" "), signed_pp(run.delta_pp))
}

fn accuracy_table(report: &DiagnosticReport, out: &mut String) {
    let w = label_width(report);
    let heads: Vec<String> = (0..max_iterations(report)).map(|k| format!("It.{k}")).collect();
    writeln!(out, "Accuracy (%)").unwrap();
    writeln!(out, "{:<w$} {} Δ", "run", heads.join(" ")).unwrap();
    for run in &report.runs {
        writeln!(out, "{:<w$} {}", run.label, accuracy_row(run)).unwrap();
    }
}

fn rate_table(report: &DiagnosticReport, out: &mut String) {
    let w = label_width(report);
    writeln!(out, "EIR / ECR (%) with {:.0}% Wilson intervals", 100.0 * report.config.confidence).unwrap();
    writeln!(out, "{:<w$} k->k+1  EIR  [lo, hi]         ECR  [lo, hi]         verdict", "run").unwrap();
    for run in &report.runs {
        for (t, v) in run.rates.per_transition.iter().zip(&run.verdicts) {
            writeln!(
                out,
                "{:<w$} {:>6}  {:>4} [{}, {}]  {:>5} [{}, {}]  {}",
                run.label,
                format!("{}->{}", t.transition, t.transition + 1),
                rate_pct(&t.eir),
                pct(t.eir.interval.lo),
                pct(t.eir.interval.hi),
                rate_pct(&t.ecr),
                pct(t.ecr.interval.lo),
                pct(t.ecr.interval.hi),
                v.verdict.tag,
            )
            .unwrap();
        }
        writeln!(
            out,
            "{:<w$} pooled  {:>4}               {:>5}",
            run.label,
            rate_pct(&run.rates.pooled_eir),
            rate_pct(&run.rates.pooled_ecr)
        )
        .unwrap();
    }
}

fn steady_state_table(report: &DiagnosticReport, out: &mut String) {
    let w = label_width(report);
    writeln!(out, "Steady state from pooled rates").unwrap();
    writeln!(out, "{:<w$}   pi*  lambda2  predicted It.K  class", "run").unwrap();
    for run in &report.runs {
        let ss = &run.steady_state;
        let pi = ss.summary.pi_star.map_or_else(|| "locked".to_string(), pct);
        writeln!(
            out,
            "{:<w$} {:>5}  {:>7.4}  {:>14}  {}",
            run.label,
            pi,
            ss.summary.lambda2,
            pct(ss.predicted_final),
            run.classification
        )
        .unwrap();
    }
}

fn p_display(p: f64) -> String {
    if p < 1e-4 {
        "<1e-4".to_string()
    } else {
        format!("{p:.4}")
    }
}

fn tests_table(report: &DiagnosticReport, out: &mut String) {
    let w = label_width(report);
    writeln!(out, "McNemar (b = correct->incorrect, c = incorrect->correct)").unwrap();
    writeln!(out, "{:<w$} pair      b    c   chi2       p  sig", "run").unwrap();
    for run in &report.runs {
        for row in &run.mcnemar {
            let r = &row.result;
            writeln!(
                out,
                "{:<w$} {:<6} {:>4} {:>4} {:>5.2} {:>7}  {}",
                run.label,
                format!("{}->{}", row.from, row.to),
                r.b,
                r.c,
                r.statistic,
                p_display(r.p_value),
                if r.significant { "*" } else { "n.s." }
            )
            .unwrap();
        }
        let b = &run.bootstrap;
        writeln!(
            out,
            "{:<w$} bootstrap Δ {} pp, {:.0}% CI [{}, {}] ({} resamples, seed {})",
            run.label,
            signed_pp(b.delta_hat),
            100.0 * b.confidence,
            signed_pp(b.ci_lo),
            signed_pp(b.ci_hi),
            b.resamples,
            b.seed
        )
        .unwrap();
    }
}

/// Runs grouped by model with a prompt column, then EIR rows.
fn paired_table(report: &DiagnosticReport, out: &mut String) {
    let grouped: Vec<&RunReport> = report.runs.iter().filter(|r| r.model.is_some()).collect();
    if report.paired.is_empty() {
        return;
    }
    let mw = grouped.iter().filter_map(|r| r.model.as_ref()).map(String::len).max().unwrap_or(5).max(5);
    let pw = grouped.iter().map(|r| r.prompt.as_deref().unwrap_or("-").len()).max().unwrap_or(6).max(6);
    let heads: Vec<String> = (0..max_iterations(report)).map(|k| format!("It.{k}")).collect();
    writeln!(out, "Paired runs (%)").unwrap();
    writeln!(out, "{:<mw$} {:<pw$} {} Δ", "model", "prompt", heads.join(" ")).unwrap();
    let mut models: Vec<&str> = Vec::new();
    for r in &grouped {
        let m = r.model.as_deref().unwrap();
        if !models.contains(&m) {
            models.push(m);
        }
    }
    for m in &models {
        for (i, r) in grouped.iter().filter(|r| r.model.as_deref() == Some(m)).enumerate() {
            let shown = if i == 0 { *m } else { "" };
            writeln!(out, "{:<mw$} {:<pw$} {}", shown, r.prompt.as_deref().unwrap_or("-"), accuracy_row(r)).unwrap();
        }
    }
    for m in &models {
        for (i, r) in grouped.iter().filter(|r| r.model.as_deref() == Some(m)).enumerate() {
            let shown = if i == 0 { *m } else { "" };
            let eirs: Vec<String> = r.rates.per_transition.iter().map(|t| rate_pct(&t.eir)).collect();
            let prompt = format!("{} EIR", r.prompt.as_deref().unwrap_or("-"));
            writeln!(out, "{:<mw$} {:<pw$} ---  {}", shown, prompt, eirs.join(" ")).unwrap();
        }
    }
    for p in &report.paired {
        writeln!(
            out,
            "{}: {} vs {} at It.{}: Δ {} pp, McNemar b={} c={} p {}, bootstrap {:.0}% CI [{}, {}]",
            p.model,
            p.variant,
            p.baseline,
            p.iteration,
            signed_pp(p.delta_pp),
            p.mcnemar.b,
            p.mcnemar.c,
            p_display(p.mcnemar.p_value),
            100.0 * p.bootstrap.confidence,
            signed_pp(p.bootstrap.ci_lo),
            signed_pp(p.bootstrap.ci_hi)
        )
        .unwrap();
    }
}

/// Plain-text tables. An empty report renders headers only.
pub fn render_text(report: &DiagnosticReport) -> String {
    let mut out = String::new();
    accuracy_table(report, &mut out);
    out.push('\n');
    rate_table(report, &mut out);
    out.push('\n');
    steady_state_table(report, &mut out);
    out.push('\n');
    tests_table(report, &mut out);
    if !report.paired.is_empty() {
        out.push('\n');
        paired_table(report, &mut out);
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn accuracy_csv(report: &DiagnosticReport) -> String {
    let mut out = String::from("run,iteration,accuracy,net_benefit\n");
    for run in &report.runs {
        for p in &run.rates.accuracy_series {
            writeln!(out, "{},{},{},{}", csv_field(&run.label), p.iteration, p.accuracy, opt(p.net_benefit)).unwrap();
        }
    }
    out
}

pub fn rates_csv(report: &DiagnosticReport) -> String {
    let mut out = String::from(
        "run,transition,n_cc,n_ci,n_ic,n_ii,eir,eir_lo,eir_hi,ecr,ecr_lo,ecr_hi,verdict,net_benefit\n",
    );
    for run in &report.runs {
        for (t, v) in run.rates.per_transition.iter().zip(&run.verdicts) {
            let c = t.counts;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                csv_field(&run.label),
                t.transition,
                c.n_cc,
                c.n_ci,
                c.n_ic,
                c.n_ii,
                opt(t.eir.value),
                t.eir.interval.lo,
                t.eir.interval.hi,
                opt(t.ecr.value),
                t.ecr.interval.lo,
                t.ecr.interval.hi,
                v.verdict.tag,
                v.verdict.net_benefit
            )
            .unwrap();
        }
    }
    out
}

pub fn tests_csv(report: &DiagnosticReport) -> String {
    let mut out = String::from("run,from,to,b,c,statistic,p_value,significant\n");
    for run in &report.runs {
        for row in &run.mcnemar {
            let r = &row.result;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_field(&run.label),
                row.from,
                row.to,
                r.b,
                r.c,
                r.statistic,
                r.p_value,
                r.significant
            )
            .unwrap();
        }
    }
    out
}

pub fn summary_csv(report: &DiagnosticReport) -> String {
    let mut out = String::from(
        "run,n,acc_first,acc_last,delta_pp,pooled_eir,pooled_ecr,pi_star,lambda2,boot_lo,boot_hi,classification\n",
    );
    for run in &report.runs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&run.label),
            run.n_problems,
            run.accuracies[0],
            run.accuracies[run.accuracies.len() - 1],
            run.delta_pp,
            opt(run.rates.pooled_eir.value),
            opt(run.rates.pooled_ecr.value),
            opt(run.steady_state.summary.pi_star),
            run.steady_state.summary.lambda2,
            run.bootstrap.ci_lo,
            run.bootstrap.ci_hi,
            run.classification
        )
        .unwrap();
    }
    out
}

pub fn render_json(report: &DiagnosticReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialises")
}

/// File name and contents of every artifact the report produces.
pub fn render_artifacts(report: &DiagnosticReport) -> Vec<(&'static str, String)> {
    vec![
        ("report.txt", render_text(report)),
        ("accuracy.csv", accuracy_csv(report)),
        ("rates.csv", rates_csv(report)),
        ("tests.csv", tests_csv(report)),
        ("summary.csv", summary_csv(report)),
        ("report.json", render_json(report)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Preset;
    use crate::sim::replay_log;

    fn replay(name: &str) -> CorrectnessLog {
        let p = Preset::lookup(name).unwrap();
        replay_log(&p.schedule(), 500, p.baseline_accuracy, 4).unwrap()
    }

    fn quick() -> ReportConfig {
        ReportConfig { resamples: 1_000, seed: 3, ..ReportConfig::default() }
    }

    #[test]
    fn classification_rule() {
        let t = Thresholds::default();
        assert_eq!(classify(3.4, Some(0.0), t), Classification::Beneficial);
        assert_eq!(classify(0.6, Some(0.002), t), Classification::Beneficial);
        assert_eq!(classify(0.2, Some(0.0), t), Classification::NonDegrading);
        assert_eq!(classify(0.0, Some(0.002), t), Classification::NonDegrading);
        assert_eq!(classify(-0.4, Some(0.002), t), Classification::NonDegrading);
        assert_eq!(classify(0.0, Some(0.02), t), Classification::Harmful);
        assert_eq!(classify(-6.2, Some(0.0202), t), Classification::Harmful);
        assert_eq!(classify(-1.0, Some(0.0), t), Classification::Harmful);
        assert_eq!(classify(0.5, Some(0.0), t), Classification::NonDegrading);
    }

    #[test]
    fn signed_formatting() {
        assert_eq!(signed_pp(-6.2), "-6.2");
        assert_eq!(signed_pp(0.2), "+0.2");
        assert_eq!(signed_pp(-0.01), "0.0");
        assert_eq!(pct(0.912), "91.2");
    }

    #[test]
    fn degrading_replay_row_and_class() {
        let report = build_report(&[replay("gpt-4o-mini")], &quick()).unwrap();
        let run = &report.runs[0];
        assert_eq!(accuracy_row(run), "91.2 90.0 89.6 86.6 85.0 Δ -6.2");
        assert_eq!(run.classification, Classification::Harmful);
        assert!(render_text(&report).contains("91.2 90.0 89.6 86.6 85.0 Δ -6.2"));
        let first_last = run.mcnemar.last().unwrap();
        assert_eq!((first_last.from, first_last.to), (0, 4));
    }

    #[test]
    fn correcting_replay_is_beneficial() {
        let report = build_report(&[replay("o3-mini")], &quick()).unwrap();
        let run = &report.runs[0];
        assert_eq!(run.classification, Classification::Beneficial);
        assert!(run.verdicts.iter().all(|v| v.verdict.tag != crate::dynamics::VerdictTag::Stop));
    }

    #[test]
    fn empty_run_list_renders_headers() {
        let report = build_report(&[], &quick()).unwrap();
        let text = render_text(&report);
        assert!(text.starts_with("Accuracy (%)"));
        assert_eq!(accuracy_csv(&report), "run,iteration,accuracy,net_benefit\n");
    }

    #[test]
    fn machine_output_keeps_full_precision() {
        let report = build_report(&[replay("gpt-4o-mini")], &quick()).unwrap();
        let csv = rates_csv(&report);
        assert!(csv.contains("0.013157894736842105"), "{csv}");
    }

    #[test]
    fn report_is_deterministic() {
        let logs = [replay("gpt-4o-mini"), replay("o3-mini")];
        let a = render_json(&build_report(&logs, &quick()).unwrap());
        let b = render_json(&build_report(&logs, &quick()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn paired_runs_by_model() {
        let std = replay("gpt-4o-mini").with_metadata("model", "gpt-4o-mini").with_metadata("prompt", "standard");
        let n = 500;
        let rows = (0..n).map(|i| vec![i < 456, i < 456, i < 457, i < 457, i < 457]).collect();
        let vf = CorrectnessLog::new(CorrectnessLog::numbered_ids(n), rows)
            .unwrap()
            .with_metadata("model", "gpt-4o-mini")
            .with_metadata("prompt", "verify-first");
        let report = build_report(&[std.with_metadata("run", "std"), vf.with_metadata("run", "vf")], &quick()).unwrap();
        assert_eq!(report.paired.len(), 1);
        let p = &report.paired[0];
        assert!((p.delta_pp - 6.4).abs() < 1e-9);
        assert_eq!(report.runs[1].classification, Classification::NonDegrading);
        let text = render_text(&report);
        assert!(text.contains("Paired runs (%)"));
        assert!(text.contains("verify-first EIR"));
    }
}
