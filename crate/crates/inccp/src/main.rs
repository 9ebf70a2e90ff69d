//! Command-line front end for the incremental cutting-plane solver.
//!
//! Exit codes: 0 on success, 1 on configuration/input errors, 2 on runtime
//! failures (oracle or master-problem breakdown, I/O during a run).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use inccp::experiment::{
    build_problem, evaluate_trace, run_experiment, CellSpec, ExperimentConfig, FReference,
    ProblemSource, RecordX, StartMode, StepSpec,
};
use inccp::model::Window;
use inccp::policy::ScheduleMode;
use inccp::uc::{generate_instance, DEFAULT_SEGMENTS};
use inccp::Error;

#[derive(Parser)]
#[command(name = "inccp", about = "Incremental regularized cutting-plane solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of solver configurations and write trace/summary CSVs.
    Run(RunArgs),
    /// Re-evaluate the objective along a recorded trace.
    EvaluateTrace(EvaluateArgs),
    /// Generate a seeded unit-commitment instance as JSON.
    GenerateInstance(GenerateArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Path to a unit-commitment instance JSON file.
    #[arg(long, conflicts_with = "synthetic")]
    instance: Option<PathBuf>,
    /// Synthetic l1 problem as "m,n,seed".
    #[arg(long)]
    synthetic: Option<String>,
    /// Dispatch-grid segments per generator for instance sources.
    #[arg(long, default_value_t = DEFAULT_SEGMENTS)]
    segments: usize,
}

impl SourceArgs {
    fn resolve(&self) -> Result<ProblemSource, Error> {
        match (&self.instance, &self.synthetic) {
            (Some(path), None) => Ok(ProblemSource::InstanceFile(path.clone())),
            (None, Some(spec)) => {
                let parts: Vec<&str> = spec.split(',').collect();
                let parse = |i: usize| -> Result<u64, Error> {
                    parts
                        .get(i)
                        .and_then(|s| s.trim().parse().ok())
                        .ok_or_else(|| {
                            Error::Config(format!("--synthetic expects \"m,n,seed\", got {spec:?}"))
                        })
                };
                Ok(ProblemSource::SyntheticAbs {
                    m: parse(0)? as usize,
                    n: parse(1)? as usize,
                    seed: parse(2)?,
                })
            }
            _ => Err(Error::Config(
                "exactly one of --instance or --synthetic is required".into(),
            )),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Batch sizes; one cell per (p, step) combination.
    #[arg(long = "p", required = true, num_args = 1.., value_delimiter = ',')]
    batch_sizes: Vec<usize>,
    /// Adjusted step sizes t~ (the actual constant step is t~ p / m).
    #[arg(long = "stepsize-adjusted", num_args = 1.., value_delimiter = ',')]
    adjusted: Vec<f64>,
    /// Actual constant step sizes.
    #[arg(long = "stepsize", num_args = 1.., value_delimiter = ',')]
    actual: Vec<f64>,
    /// Cut-retention window: a positive integer or "inf".
    #[arg(long, default_value = "inf")]
    window: String,
    /// Component evaluation order.
    #[arg(long, default_value = "cyclic")]
    schedule: String,
    /// Seed for shuffled schedules (and cell identification).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max-iters", default_value_t = 200)]
    max_iters: usize,
    /// "cold" or "warm:PATH" (JSON array with the initial point).
    #[arg(long, default_value = "cold")]
    start: String,
    /// Gap reference: a numeric objective value or "best-of-batch".
    #[arg(long, default_value = "best-of-batch")]
    fstar: String,
    /// Relative gap targets for the summary (repeatable).
    #[arg(long = "tol", num_args = 1.., value_delimiter = ',')]
    tolerances: Vec<f64>,
    /// Keep only iterations where the candidate strictly improves (p = m only).
    #[arg(long = "serious-step", default_value_t = false)]
    serious_step: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Iterate recording in traces: "all", "none", or "every:N".
    #[arg(long = "record-x", default_value = "none")]
    record_x: String,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Trace CSV produced by `run` with --record-x.
    #[arg(long)]
    trace: PathBuf,
    /// Comma-separated iteration numbers; defaults to every recorded row.
    #[arg(long, value_delimiter = ',')]
    iterations: Vec<usize>,
    /// Output path; defaults to rewriting the trace in place.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long = "n-g")]
    n_g: usize,
    #[arg(long = "n-t")]
    n_t: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_window(s: &str) -> Result<Window, Error> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(Window::Infinite);
    }
    s.parse::<usize>()
        .ok()
        .filter(|&w| w >= 1)
        .map(Window::Finite)
        .ok_or_else(|| Error::Config(format!("--window must be a positive integer or \"inf\", got {s:?}")))
}

fn parse_schedule(s: &str) -> Result<ScheduleMode, Error> {
    match s {
        "cyclic" => Ok(ScheduleMode::Cyclic),
        "shuffled" => Ok(ScheduleMode::Shuffled),
        _ => Err(Error::Config(format!(
            "--schedule must be \"cyclic\" or \"shuffled\", got {s:?}"
        ))),
    }
}

fn parse_start(s: &str) -> Result<StartMode, Error> {
    if s == "cold" {
        Ok(StartMode::Cold)
    } else if let Some(path) = s.strip_prefix("warm:") {
        Ok(StartMode::Warm(PathBuf::from(path)))
    } else {
        Err(Error::Config(format!(
            "--start must be \"cold\" or \"warm:PATH\", got {s:?}"
        )))
    }
}

fn parse_record_x(s: &str) -> Result<RecordX, Error> {
    if s == "all" {
        Ok(RecordX::All)
    } else if s == "none" {
        Ok(RecordX::None)
    } else if let Some(n) = s.strip_prefix("every:") {
        n.parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .map(RecordX::Every)
            .ok_or_else(|| Error::Config(format!("bad --record-x period {n:?}")))
    } else {
        Err(Error::Config(format!(
            "--record-x must be \"all\", \"none\", or \"every:N\", got {s:?}"
        )))
    }
}

fn run_command(args: &RunArgs) -> Result<(), Error> {
    let window = parse_window(&args.window)?;
    let mode = parse_schedule(&args.schedule)?;
    let steps: Vec<StepSpec> = match (args.adjusted.is_empty(), args.actual.is_empty()) {
        (false, true) => args.adjusted.iter().map(|&t| StepSpec::Adjusted(t)).collect(),
        (true, false) => args.actual.iter().map(|&t| StepSpec::Actual(t)).collect(),
        _ => {
            return Err(Error::Config(
                "exactly one of --stepsize-adjusted or --stepsize is required".into(),
            ))
        }
    };
    let f_reference = if args.fstar == "best-of-batch" {
        FReference::BestOfBatch
    } else {
        FReference::Value(args.fstar.parse().map_err(|_| {
            Error::Config(format!(
                "--fstar must be a number or \"best-of-batch\", got {:?}",
                args.fstar
            ))
        })?)
    };

    let mut cells = Vec::new();
    for &p in &args.batch_sizes {
        for &step in &steps {
            cells.push(CellSpec {
                p,
                step,
                window,
                mode,
                seed: args.seed,
                serious_step: args.serious_step,
                max_iters: None,
            });
        }
    }

    let mut config = ExperimentConfig::new(args.source.resolve()?, args.out.clone());
    config.segments = args.source.segments;
    config.cells = cells;
    config.start = parse_start(&args.start)?;
    if !args.tolerances.is_empty() {
        config.tolerances = args.tolerances.clone();
    }
    config.f_reference = f_reference;
    config.max_iters = args.max_iters;
    config.record_x = parse_record_x(&args.record_x)?;

    let output = run_experiment(&config)?;
    println!(
        "wrote {} ({} rows, reference objective {})",
        output.summary_path.display(),
        output.rows.len(),
        output.f_reference
    );
    Ok(())
}

fn evaluate_command(args: &EvaluateArgs) -> Result<(), Error> {
    let (problem, _) = build_problem(&args.source.resolve()?, args.source.segments)?;
    let iterations = if args.iterations.is_empty() {
        None
    } else {
        Some(args.iterations.as_slice())
    };
    let out = args.out.clone().unwrap_or_else(|| args.trace.clone());
    evaluate_trace(&args.trace, &problem, iterations, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn generate_command(args: &GenerateArgs) -> Result<(), Error> {
    if args.n_g == 0 || args.n_t == 0 {
        return Err(Error::Config("--n-g and --n-t must be >= 1".into()));
    }
    let instance = generate_instance(args.seed, args.n_g, args.n_t);
    instance.to_file(&args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

/// Errors that stem from the request itself (flags, files handed in, instance
/// contents) exit 1; breakdowns while solving exit 2.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Instance(_) | Error::Json(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes, anything else is a usage error
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(args) => run_command(args),
        Command::EvaluateTrace(args) => evaluate_command(args),
        Command::GenerateInstance(args) => generate_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
