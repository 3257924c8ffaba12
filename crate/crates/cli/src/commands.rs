use std::fs;
use std::path::{Path, PathBuf};

use refdyn::asc::{self, AscConfig, EquilibriumMode, Labeler, Scenario, ScriptedBackend};
use refdyn::baselines::{fit_correlation, simulate_self_consistency, theoretical_sc_accuracy, CorrelatedSampleModel};
use refdyn::dynamics::TransitionRates;
use refdyn::estimate::{count_transitions, estimate_rates_at};
use refdyn::log::CorrectnessLog;
use refdyn::logfile;
use refdyn::report::{self, pct, ReportConfig, Thresholds};
use refdyn::schedule::{preset_names, Preset, RateSchedule};
use refdyn::sim::{analytic_trajectory, replay_log, simulate_population, SimConfig};
use serde_json::json;

use crate::error::CliError;
use crate::{AnalyzeArgs, AscArgs, DiagnoseArgs, EquilibriumArg, LayoutArg, ReportArgs, ScArgs, SimulateArgs};

pub struct Context {
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Context {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

fn to_json(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("output serialises") + "\n"
}

fn read_logs(path: &Path) -> Result<Vec<CorrectnessLog>, CliError> {
    Ok(logfile::read_logs(path)?)
}

fn read_single(path: &Path) -> Result<CorrectnessLog, CliError> {
    let mut logs = read_logs(path)?;
    if logs.len() != 1 {
        return Err(CliError::Data(format!("{}: expected one run, found {}", path.display(), logs.len())));
    }
    Ok(logs.remove(0))
}

fn run_name(log: &CorrectnessLog, i: usize) -> String {
    log.run_label()
        .map(str::to_string)
        .or_else(|| log.metadata.get("model").cloned())
        .unwrap_or_else(|| format!("run{i}"))
}

/// Acc(k+1) * N = n_cc + n_ic for every transition.
fn check_accounting(log: &CorrectnessLog) -> Result<(), CliError> {
    for k in 0..log.n_iterations() {
        let c = count_transitions(log, k).map_err(|e| CliError::Internal(e.to_string()))?;
        let after = log.correct_count(k + 1).map_err(|e| CliError::Internal(e.to_string()))?;
        if c.n_cc + c.n_ic != after || c.total() != log.n_problems() {
            return Err(CliError::Internal(format!("transition counts at {k} do not add up")));
        }
    }
    Ok(())
}

pub fn simulate(ctx: &Context, a: SimulateArgs) -> Result<(), CliError> {
    if a.list_presets {
        for name in preset_names() {
            println!("{name}");
        }
        return Ok(());
    }
    let (schedule, baseline, default_k): (RateSchedule, Option<f64>, usize) = match (&a.preset, a.eir, a.ecr) {
        (Some(name), _, _) => {
            let p = Preset::lookup(name)?;
            (p.schedule(), Some(p.baseline_accuracy), p.rates_pct.len())
        }
        (None, Some(eir), Some(ecr)) => {
            let rates = TransitionRates::new(eir, ecr).map_err(|e| CliError::Usage(e.to_string()))?;
            (RateSchedule::stationary(rates), None, 4)
        }
        _ => return Err(CliError::Usage("give --preset NAME or both --eir and --ecr".into())),
    };
    let acc0 = a
        .acc0
        .or(baseline)
        .ok_or_else(|| CliError::Usage("--acc0 is required with stationary rates".into()))?;
    let k = a.k.unwrap_or(default_k);
    let tail = schedule.stationary_tail || a.stationary_tail;
    let schedule = schedule.with_stationary_tail(tail);

    let log = if a.replay {
        replay_log(&schedule, a.n, acc0, k)?
    } else {
        let config = SimConfig { n_problems: a.n, n_iterations: k, initial_accuracy: acc0, seed: ctx.seed, schedule: schedule.clone() };
        simulate_population(&config)?.log
    };
    check_accounting(&log)?;

    let text = match a.layout {
        LayoutArg::Records => logfile::write_log(&log)?,
        LayoutArg::Table => logfile::write_table(&log)?,
    };
    let back = logfile::parse_log(&text).map_err(|e| CliError::Internal(format!("written log does not parse: {e}")))?;
    if back != log {
        return Err(CliError::Internal("written log does not read back identically".into()));
    }
    let log_path = ctx.write(&a.name, &text)?;

    let analytic = analytic_trajectory(&schedule, acc0, k)?;
    let observed = log.accuracies();
    let mut csv = String::from("iteration,analytic,observed\n");
    for (p, o) in analytic.iter().zip(&observed) {
        csv.push_str(&format!("{},{},{}\n", p.iteration, p.accuracy, o));
    }
    ctx.write("trajectory.csv", &csv)?;

    println!("wrote {}", log_path.display());
    println!("analytic {}", analytic.iter().map(|p| pct(p.accuracy)).collect::<Vec<_>>().join(" "));
    println!("observed {}", observed.iter().map(|&o| pct(o)).collect::<Vec<_>>().join(" "));
    Ok(())
}

pub fn analyze(ctx: &Context, a: AnalyzeArgs) -> Result<(), CliError> {
    let logs = read_logs(&a.log)?;
    let mut out = Vec::new();
    for (i, log) in logs.iter().enumerate() {
        let name = run_name(log, i);
        let est = estimate_rates_at(log, a.confidence)?;
        println!("{name}: accuracy {}", log.accuracies().iter().map(|&x| pct(x)).collect::<Vec<_>>().join(" "));
        for t in &est.per_transition {
            let show = |r: &refdyn::estimate::RateEstimate| r.value.map_or_else(|| "n/a".to_string(), pct);
            println!(
                "  {}->{}  EIR {:>5} [{}, {}]  ECR {:>5} [{}, {}]",
                t.transition,
                t.transition + 1,
                show(&t.eir),
                pct(t.eir.interval.lo),
                pct(t.eir.interval.hi),
                show(&t.ecr),
                pct(t.ecr.interval.lo),
                pct(t.ecr.interval.hi)
            );
        }
        out.push(json!({ "run": name, "estimates": est }));
    }
    ctx.write("rates.json", &to_json(&out))?;
    Ok(())
}

pub fn diagnose(ctx: &Context, a: DiagnoseArgs) -> Result<(), CliError> {
    let logs = read_logs(&a.log)?;
    let config = ReportConfig {
        seed: ctx.seed,
        thresholds: Thresholds { band_pp: a.band, max_eir: a.max_eir },
        ..ReportConfig::default()
    };
    let rep = report::build_report(&logs, &config)?;
    let mut out = Vec::new();
    for run in &rep.runs {
        println!("{}: {}  [{}]", run.label, report::accuracy_row(run), run.classification);
        for v in &run.verdicts {
            println!(
                "  {}->{}  acc {}  ECR/EIR {:.4}  Acc/(1-Acc) {:.4}  NB {:+.5}  {}",
                v.transition,
                v.transition + 1,
                pct(v.accuracy),
                v.verdict.lhs,
                v.verdict.rhs,
                v.verdict.net_benefit,
                v.verdict.tag
            );
        }
        let ss = &run.steady_state;
        println!(
            "  pooled EIR {} ECR {}  pi* {}  lambda2 {:.4}",
            pct(ss.rates.eir()),
            pct(ss.rates.ecr()),
            ss.summary.pi_star.map_or_else(|| "locked".to_string(), pct),
            ss.summary.lambda2
        );
        out.push(json!({
            "run": run.label,
            "accuracies": run.accuracies,
            "delta_pp": run.delta_pp,
            "verdicts": run.verdicts,
            "steady_state": run.steady_state,
            "classification": run.classification,
            "thresholds": config.thresholds,
        }));
    }
    ctx.write("diagnosis.json", &to_json(&out))?;
    Ok(())
}

pub fn asc(ctx: &Context, a: AscArgs) -> Result<(), CliError> {
    if let Some(paths) = &a.confidence_tax {
        let with = read_single(&paths[0])?;
        let without = read_single(&paths[1])?;
        let tax = asc::confidence_tax_report(&with, &without, a.resamples, ctx.seed)?;
        println!(
            "iteration 0: {} with confidence prompt vs {} without, Δ {} pp, McNemar p {:.4}, {:.0}% CI [{}, {}]",
            pct(tax.accuracy_with),
            pct(tax.accuracy_without),
            report::signed_pp(tax.delta_pp),
            tax.mcnemar.p_value,
            100.0 * tax.bootstrap.confidence,
            report::signed_pp(tax.bootstrap.ci_lo),
            report::signed_pp(tax.bootstrap.ci_hi)
        );
        ctx.write("confidence_tax.json", &to_json(&tax))?;
        return Ok(());
    }

    let path = a.scenario.as_ref().expect("clap requires a scenario");
    let scenario = Scenario::read(path)?;
    let mut config = match (a.equilibrium, &a.calibration) {
        (EquilibriumArg::Calibration, Some(p)) => AscConfig::calibrated_from_log(&read_single(p)?)?,
        (EquilibriumArg::Calibration, None) => {
            return Err(CliError::Usage("--equilibrium calibration needs --calibration LOG".into()))
        }
        (EquilibriumArg::Online, _) => AscConfig { equilibrium_mode: EquilibriumMode::OnlineLabeled, ..AscConfig::default() },
        (EquilibriumArg::Disabled, _) => AscConfig::default(),
    };
    config.tau = a.tau;
    config.max_iterations = a.max_iterations;

    let mut backend = ScriptedBackend::new(&scenario);
    let labels = scenario.fully_labelled().then(|| backend.clone());
    let labeler = labels.as_ref().map(|l| l as &dyn Labeler);
    let batch = asc::run_asc_batch(&scenario.problems(), &mut backend, &config, labeler)?;

    let mut trace = String::new();
    for o in &batch.outcomes {
        trace.push_str(&format!(
            "{} stop={} iterations={} answer={} calls: {}\n",
            o.problem_id,
            o.stop_reason,
            o.iterations_used,
            o.final_answer,
            o.call_trace()
        ));
    }
    ctx.write("asc_trace.txt", &trace)?;
    ctx.write("asc.json", &to_json(&json!({ "config": config, "summary": batch.summary, "outcomes": batch.outcomes })))?;

    let s = &batch.summary;
    println!("{} problems, {} refine calls", s.n_problems, s.refine_calls);
    for (reason, n) in &s.stop_reasons {
        println!("  stop {reason}: {n}");
    }
    for (k, n) in &s.iterations_histogram {
        println!("  returned iteration {k}: {n}");
    }
    if let Some(acc) = s.final_accuracy {
        println!("  final accuracy {}", pct(acc));
    }
    Ok(())
}

pub fn sc(ctx: &Context, a: ScArgs) -> Result<(), CliError> {
    let closed_form = theoretical_sc_accuracy(a.p, a.k)?;
    let model = CorrelatedSampleModel::new(a.p, a.rho, a.k)?;
    let simulated = (a.n > 0).then(|| simulate_self_consistency(model, a.n, ctx.seed));
    let fitted = a.fit.map(|target| fit_correlation(a.p, a.k, target)).transpose()?;

    println!("independent closed form  {}", pct(closed_form));
    println!("mixture (rho = {})  {}", a.rho, pct(model.expected_accuracy()));
    if let Some(s) = &simulated {
        println!("simulated N={}  {}", s.n_problems, pct(s.accuracy));
    }
    if let (Some(target), Some(rho)) = (a.fit, fitted) {
        println!("rho fitted to {}: {rho:.4}", pct(target));
    }
    ctx.write(
        "sc.json",
        &to_json(&json!({
            "p": a.p,
            "k": a.k,
            "closed_form": closed_form,
            "model": model,
            "expected_accuracy": model.expected_accuracy(),
            "simulation": simulated,
            "fit_target": a.fit,
            "fitted_rho": fitted,
        })),
    )?;
    Ok(())
}

pub fn report(ctx: &Context, a: ReportArgs) -> Result<(), CliError> {
    let mut logs = Vec::new();
    for p in &a.logs {
        logs.extend(read_logs(p)?);
    }
    let config = ReportConfig {
        confidence: a.confidence,
        alpha: a.alpha,
        resamples: a.resamples,
        seed: ctx.seed,
        thresholds: Thresholds { band_pp: a.band, max_eir: a.max_eir },
    };
    let rep = report::build_report(&logs, &config)?;
    for (name, contents) in report::render_artifacts(&rep) {
        ctx.write(name, &contents)?;
    }
    print!("{}", report::render_text(&rep));
    Ok(())
}
