//! Batch experiment runner: build the problem, execute one run per cell and
//! emit a per-run trace CSV plus a summary CSV with the gap-to-tolerance
//! metrics.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{BoxSet, Window};
use crate::oracle::{make_abs_problem, Problem};
use crate::policy::{adjusted_to_actual, ScheduleMode, StepSizeRule};
use crate::solver::{self, gap_to_target, EvalPolicy, RunConfig, RunTrace, ScheduleSpec};
use crate::uc::{dual_problem, PowerGrid, UcInstance, DEFAULT_SEGMENTS};
use crate::Error;

pub const TRACE_HEADER: [&str; 6] = ["k", "t_k", "cum_evals", "wall_s", "f_xk", "dual_bound"];
pub const SUMMARY_HEADER: [&str; 9] = [
    "cell",
    "p_over_m",
    "stepsize_adjusted",
    "W",
    "start",
    "tol",
    "time_s",
    "comp_eval",
    "iter",
];

#[derive(Clone, Debug)]
pub enum ProblemSource {
    InstanceFile(PathBuf),
    Instance(UcInstance),
    /// Sum of l1 deviations from seeded centers in [-5, 5]^n over R^n.
    SyntheticAbs { m: usize, n: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum StartMode {
    Cold,
    Warm(PathBuf),
}

impl std::fmt::Display for StartMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StartMode::Cold => write!(f, "cold"),
            StartMode::Warm(_) => write!(f, "warm"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FReference {
    Value(f64),
    /// Smallest exact objective seen across all cells' traces.
    BestOfBatch,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSpec {
    /// Adjusted step size t~; the actual step is t~ p / m.
    Adjusted(f64),
    Actual(f64),
}

impl StepSpec {
    pub fn actual(self, p: usize, m: usize) -> f64 {
        match self {
            StepSpec::Adjusted(t) => adjusted_to_actual(t, p, m),
            StepSpec::Actual(t) => t,
        }
    }

    pub fn adjusted(self, p: usize, m: usize) -> f64 {
        match self {
            StepSpec::Adjusted(t) => t,
            StepSpec::Actual(t) => t * m as f64 / p as f64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CellSpec {
    pub p: usize,
    pub step: StepSpec,
    pub window: Window,
    pub mode: ScheduleMode,
    pub seed: u64,
    pub serious_step: bool,
    /// Per-cell iteration budget; falls back to the experiment-wide value.
    pub max_iters: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordX {
    All,
    None,
    Every(usize),
}

impl RecordX {
    fn wants(self, k: usize) -> bool {
        match self {
            RecordX::All => true,
            RecordX::None => false,
            RecordX::Every(n) => n > 0 && k % n == 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub source: ProblemSource,
    /// Power-grid segments for unit-commitment sources.
    pub segments: usize,
    pub cells: Vec<CellSpec>,
    pub start: StartMode,
    pub tolerances: Vec<f64>,
    pub f_reference: FReference,
    pub out_dir: PathBuf,
    pub max_iters: usize,
    pub record_x: RecordX,
    pub master_tol: f64,
}

impl ExperimentConfig {
    pub fn new(source: ProblemSource, out_dir: PathBuf) -> ExperimentConfig {
        ExperimentConfig {
            source,
            segments: DEFAULT_SEGMENTS,
            cells: Vec::new(),
            start: StartMode::Cold,
            tolerances: vec![0.001, 0.0005],
            f_reference: FReference::BestOfBatch,
            out_dir,
            max_iters: 200,
            record_x: RecordX::None,
            master_tol: crate::master::DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub cell: String,
    pub p_over_m: f64,
    pub stepsize_adjusted: f64,
    pub window: Window,
    pub start: String,
    pub tol: f64,
    pub hit: Option<solver::GapHit>,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub rows: Vec<SummaryRow>,
    pub traces: Vec<(String, RunTrace)>,
    pub f_reference: f64,
    pub summary_path: PathBuf,
}

/// Builds the problem behind a source; for synthetic sources the known
/// optimal value is returned as well.
pub fn build_problem(
    source: &ProblemSource,
    segments: usize,
) -> Result<(Problem, Option<f64>), Error> {
    match source {
        ProblemSource::InstanceFile(path) => {
            let instance = UcInstance::from_file(path)?;
            let grid = PowerGrid::uniform(&instance, segments);
            Ok((dual_problem(&instance, &grid), None))
        }
        ProblemSource::Instance(instance) => {
            instance.validate()?;
            let grid = PowerGrid::uniform(instance, segments);
            Ok((dual_problem(instance, &grid), None))
        }
        ProblemSource::SyntheticAbs { m, n, seed } => {
            if *m == 0 || *n == 0 {
                return Err(Error::Config("synthetic problem needs m, n >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let centers: Vec<Vec<f64>> = (0..*m)
                .map(|_| (0..*n).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let synth = make_abs_problem(centers, BoxSet::full_space(*n));
            Ok((synth.problem, Some(synth.f_star)))
        }
    }
}

fn initial_point(problem: &Problem, start: &StartMode) -> Result<Vec<f64>, Error> {
    match start {
        StartMode::Cold => Ok(problem.set.project(&vec![0.0; problem.dim()])),
        StartMode::Warm(path) => {
            let data = fs::read_to_string(path)?;
            let x0: Vec<f64> = serde_json::from_str(&data)?;
            if x0.len() != problem.dim() {
                return Err(Error::Config(format!(
                    "warmstart vector has dimension {}, expected {}",
                    x0.len(),
                    problem.dim()
                )));
            }
            if !problem.set.contains(&x0) {
                return Err(Error::Config("warmstart point outside the set".into()));
            }
            Ok(x0)
        }
    }
}

pub fn cell_id(idx: usize, cell: &CellSpec, m: usize) -> String {
    format!(
        "c{idx:02}_p{}_t{:e}_W{}_{}_s{}",
        cell.p,
        cell.step.actual(cell.p, m),
        cell.window,
        cell.mode,
        cell.seed
    )
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Writes one trace CSV. `record_x` appends the iterate coordinates for
/// replay-free post-hoc evaluation.
pub fn write_trace_csv(
    path: &Path,
    trace: &RunTrace,
    record_x: RecordX,
    dim: usize,
) -> Result<(), Error> {
    let mut out = String::new();
    let mut header: Vec<String> = TRACE_HEADER.iter().map(|s| s.to_string()).collect();
    if record_x != RecordX::None {
        for j in 0..dim {
            header.push(format!("x{j}"));
        }
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for r in &trace.records {
        let mut fields = vec![
            r.k.to_string(),
            format!("{}", r.t_k),
            r.cumulative_evals.to_string(),
            format!("{}", r.wall_s),
            fmt_opt(r.f_xk),
            fmt_opt(r.f_xk.map(|f| -f)),
        ];
        if record_x != RecordX::None {
            if record_x.wants(r.k) {
                fields.extend(r.x_k.iter().map(|v| format!("{v}")));
            } else {
                fields.extend(std::iter::repeat(String::new()).take(dim));
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, Error> {
    if config.cells.is_empty() {
        return Err(Error::Config("no experiment cells given".into()));
    }
    for &tol in &config.tolerances {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::Config("tolerance targets must lie in (0, 1)".into()));
        }
    }
    let (problem, _) = build_problem(&config.source, config.segments)?;
    let x0 = initial_point(&problem, &config.start)?;
    fs::create_dir_all(&config.out_dir)?;

    let m = problem.m();
    let mut traces: Vec<(String, RunTrace)> = Vec::new();
    for (idx, cell) in config.cells.iter().enumerate() {
        let id = cell_id(idx, cell, m);
        let run_config = RunConfig {
            window: cell.window,
            schedule: ScheduleSpec {
                p: cell.p,
                mode: cell.mode,
                seed: cell.seed,
            },
            step_rule: StepSizeRule::Constant(cell.step.actual(cell.p, m)),
            x0: x0.clone(),
            max_iters: cell.max_iters.unwrap_or(config.max_iters),
            f_reference: None,
            serious_step: cell.serious_step,
            master_tol: config.master_tol,
            eval_f: EvalPolicy::All,
            early_stop_fraction: None,
        };
        let trace = solver::run(&problem, &run_config).map_err(|f| f.error)?;
        let trace_path = config.out_dir.join(format!("trace_{id}.csv"));
        write_trace_csv(&trace_path, &trace, config.record_x, problem.dim())?;
        traces.push((id, trace));
    }

    let f_reference = match config.f_reference {
        FReference::Value(v) => v,
        FReference::BestOfBatch => traces
            .iter()
            .flat_map(|(_, t)| t.records.iter().filter_map(|r| r.f_xk))
            .fold(f64::INFINITY, f64::min),
    };
    if !f_reference.is_finite() {
        return Err(Error::Config(
            "no finite objective values available for the gap reference".into(),
        ));
    }

    let mut rows = Vec::new();
    let mut out = String::new();
    out.push_str(&SUMMARY_HEADER.join(","));
    out.push('\n');
    for ((id, trace), cell) in traces.iter().zip(&config.cells) {
        for &tol in &config.tolerances {
            let hit = gap_to_target(trace, f_reference, tol);
            let row = SummaryRow {
                cell: id.clone(),
                p_over_m: cell.p as f64 / m as f64,
                stepsize_adjusted: cell.step.adjusted(cell.p, m),
                window: cell.window,
                start: config.start.to_string(),
                tol,
                hit,
            };
            let (time_s, comp_eval, iter) = match hit {
                Some(h) => (
                    format!("{}", h.wall_s),
                    h.cumulative_evals.to_string(),
                    h.iter.to_string(),
                ),
                None => (
                    "not-reached".to_string(),
                    "not-reached".to_string(),
                    "not-reached".to_string(),
                ),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                row.cell,
                row.p_over_m,
                row.stepsize_adjusted,
                row.window,
                row.start,
                row.tol,
                time_s,
                comp_eval,
                iter
            ));
            rows.push(row);
        }
    }
    let summary_path = config.out_dir.join("summary.csv");
    fs::write(&summary_path, out)?;

    Ok(ExperimentOutput {
        rows,
        traces,
        f_reference,
        summary_path,
    })
}

/// Fills the `f_xk` (and `dual_bound`) columns of a trace CSV by evaluating
/// the recorded iterates, leaving every other field byte-identical.
/// `iterations = None` fills every row that carries a recorded iterate.
pub fn evaluate_trace(
    trace_path: &Path,
    problem: &Problem,
    iterations: Option<&[usize]>,
    out_path: &Path,
) -> Result<(), Error> {
    let data = fs::read_to_string(trace_path)?;
    let mut lines = data.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Config("empty trace file".into()))?;
    let header: Vec<&str> = header_line.split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let k_col = col("k").ok_or_else(|| Error::Config("trace lacks a k column".into()))?;
    let f_col = col("f_xk").ok_or_else(|| Error::Config("trace lacks an f_xk column".into()))?;
    let bound_col = col("dual_bound");
    let x_cols: Vec<usize> = (0..problem.dim())
        .map(|j| col(&format!("x{j}")))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| {
            Error::Config("trace lacks recorded iterates (rerun with --record-x)".into())
        })?;

    let mut out = String::new();
    out.push_str(header_line);
    out.push('\n');
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields: Vec<String> = line.split(',').map(|s| s.to_string()).collect();
        let k: usize = fields[k_col]
            .parse()
            .map_err(|_| Error::Config("malformed k column".into()))?;
        let wanted = iterations.map_or(true, |its| its.contains(&k));
        let has_x = x_cols.iter().all(|&c| !fields[c].is_empty());
        if wanted {
            if !has_x {
                return Err(Error::Config(format!(
                    "iteration {k} has no recorded iterate to evaluate"
                )));
            }
            let x: Vec<f64> = x_cols
                .iter()
                .map(|&c| fields[c].parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| Error::Config("malformed iterate column".into()))?;
            let f = problem.objective(&x);
            fields[f_col] = format!("{f}");
            if let Some(bc) = bound_col {
                fields[bc] = format!("{}", -f);
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(out_path, out)?;
    Ok(())
}
