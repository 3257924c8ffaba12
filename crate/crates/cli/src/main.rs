//! `refdyn`: simulate, analyse and report on self-correction error dynamics.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "refdyn", version, about = "Error dynamics of iterative self-correction")]
struct Cli {
    /// Directory that receives every artifact (created if missing).
    #[arg(long, global = true, default_value = "refdyn-out")]
    out_dir: PathBuf,

    /// Seed for every random draw.
    #[arg(long, global = true, env = "REFDYN_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a correctness log from a preset or stationary rates.
    Simulate(SimulateArgs),
    /// Estimate EIR/ECR per transition with Wilson intervals.
    Analyze(AnalyzeArgs),
    /// Stop-or-iterate verdicts, steady state and classification.
    Diagnose(DiagnoseArgs),
    /// Run the adaptive self-correction controller on a scenario file.
    Asc(AscArgs),
    /// Self-consistency baseline: closed form, simulation, correlation fit.
    Sc(ScArgs),
    /// Render the full diagnostic report as text, CSV and JSON.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LayoutArg {
    Records,
    Table,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Named rate schedule (see --list-presets).
    #[arg(long, conflicts_with_all = ["eir", "ecr"])]
    preset: Option<String>,
    /// Stationary EIR (probability); needs --ecr.
    #[arg(long, requires = "ecr")]
    eir: Option<f64>,
    /// Stationary ECR (probability); needs --eir.
    #[arg(long, requires = "eir")]
    ecr: Option<f64>,
    /// Number of problems.
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Refinement iterations; defaults to the preset length (4 for stationary rates).
    #[arg(long)]
    k: Option<usize>,
    /// Iteration-0 accuracy; defaults to the preset baseline.
    #[arg(long)]
    acc0: Option<f64>,
    /// Repeat the last scheduled transition when K exceeds the schedule.
    #[arg(long)]
    stationary_tail: bool,
    /// Deterministic expected-count replay instead of Monte Carlo.
    #[arg(long)]
    replay: bool,
    #[arg(long, value_enum, default_value = "records")]
    layout: LayoutArg,
    /// Output log file name inside --out-dir.
    #[arg(long, default_value = "log.txt")]
    name: String,
    /// Print the preset names and exit.
    #[arg(long)]
    list_presets: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Log file (records or table layout).
    log: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    log: PathBuf,
    /// Non-degrading band, percentage points.
    #[arg(long, default_value_t = 0.5)]
    band: f64,
    /// Largest pooled EIR counted as suppressed (probability).
    #[arg(long, default_value_t = 0.005)]
    max_eir: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EquilibriumArg {
    Disabled,
    Calibration,
    Online,
}

#[derive(Debug, Args)]
struct AscArgs {
    /// Scenario file (JSON) scripting the backend.
    #[arg(required_unless_present = "confidence_tax")]
    scenario: Option<PathBuf>,
    /// Confidence threshold on the 1-10 scale.
    #[arg(long, default_value_t = 8.0)]
    tau: f64,
    /// Refinement budget K.
    #[arg(long, default_value_t = 4)]
    max_iterations: usize,
    #[arg(long, value_enum, default_value = "disabled")]
    equilibrium: EquilibriumArg,
    /// Labelled log whose pooled rates drive calibration mode.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Compare iteration-0 accuracy of WITH (confidence elicited) against WITHOUT.
    #[arg(long, num_args = 2, value_names = ["WITH", "WITHOUT"], conflicts_with = "scenario")]
    confidence_tax: Option<Vec<PathBuf>>,
    #[arg(long, default_value_t = 10_000)]
    resamples: usize,
}

#[derive(Debug, Args)]
struct ScArgs {
    /// Single-sample accuracy.
    #[arg(long)]
    p: f64,
    /// Samples per problem (odd).
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Probability that all samples share one draw.
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Problems to simulate; 0 skips simulation.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Observed accuracy to fit the correlation weight to.
    #[arg(long)]
    fit: Option<f64>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Log files; each may hold several runs.
    logs: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    resamples: usize,
    #[arg(long, default_value_t = 0.5)]
    band: f64,
    #[arg(long, default_value_t = 0.005)]
    max_eir: f64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = commands::Context { out_dir: cli.out_dir, seed: cli.seed };
    match cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Analyze(a) => commands::analyze(&ctx, a),
        Command::Diagnose(a) => commands::diagnose(&ctx, a),
        Command::Asc(a) => commands::asc(&ctx, a),
        Command::Sc(a) => commands::sc(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(error::EXIT_USAGE),
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(error::EXIT_INTERNAL),
    }
}
