//! Running seeded trials and writing their traces.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use bowls::{run_problem, Method, OptimizerConfig, ProblemSpec, RunTrace, Target};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::report::{summarize_rows, trajectory_rows, write_summary, write_trajectory, SummaryRow};

pub const TRACE_COLUMNS: [&str; 8] =
    ["problem", "method", "trial", "seed", "event_index", "event_kind", "combined_evals", "best_value"];

/// Event kind of the row that closes a failed trial.
pub const FAILED_KIND: &str = "failed";
const TERMINATED_PREFIX: &str = "terminated-";

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub problem: String,
    pub method: String,
    pub trial: usize,
    pub seed: u64,
    pub event_index: usize,
    pub event_kind: String,
    pub combined_evals: u64,
    pub best_value: f64,
}

impl TraceRow {
    /// Closing rows carry the final totals rather than an optimizer event.
    pub fn is_closing(&self) -> bool {
        self.event_kind == FAILED_KIND || self.event_kind.starts_with(TERMINATED_PREFIX)
    }

    pub fn is_failure(&self) -> bool {
        self.event_kind == FAILED_KIND
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub problem: String,
    pub method: Method,
    pub trial: usize,
    pub seed: u64,
    pub result: std::result::Result<RunTrace, String>,
}

impl TrialOutcome {
    /// The trial's events followed by one closing row.
    pub fn rows(&self) -> Vec<TraceRow> {
        let row = |event_index: usize, event_kind: String, combined_evals: u64, best_value: f64| TraceRow {
            problem: self.problem.clone(),
            method: self.method.name().to_string(),
            trial: self.trial,
            seed: self.seed,
            event_index,
            event_kind,
            combined_evals,
            best_value,
        };
        match &self.result {
            Ok(trace) => {
                let mut rows: Vec<TraceRow> = trace
                    .events
                    .iter()
                    .enumerate()
                    .map(|(i, e)| row(i, e.kind.as_str().to_string(), e.combined_evals, e.best_value))
                    .collect();
                rows.push(row(
                    trace.events.len(),
                    format!("{TERMINATED_PREFIX}{}", trace.termination.as_str()),
                    trace.combined_evals(),
                    trace.final_best_value,
                ));
                rows
            }
            Err(_) => vec![row(0, FAILED_KIND.to_string(), 0, f64::INFINITY)],
        }
    }
}

/// Optimizer settings for one problem: the shared overrides plus the budget
/// and, when enabled, the problem's known minimum as the stopping target.
pub fn optimizer_for(config: &ExperimentConfig, problem: &ProblemSpec) -> OptimizerConfig {
    OptimizerConfig {
        budget: config.budget,
        target: problem.known_minimum.filter(|_| config.stop_at_target).map(Target::new),
        ..config.optimizer.clone()
    }
}

/// Runs every (problem, method, trial) in parallel. Output order follows the
/// config: problems, then methods, then trials.
pub fn run_trials(config: &ExperimentConfig, problems: &[ProblemSpec]) -> Vec<TrialOutcome> {
    let mut jobs = Vec::new();
    for problem in problems {
        let optimizer = optimizer_for(config, problem);
        for &method in &config.methods {
            for trial in 0..config.trials_for(&problem.name) {
                jobs.push((problem, method, trial, optimizer.clone()));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(problem, method, trial, optimizer)| {
            let seed = config.seed_for(trial);
            let result = run_problem(method, problem, &optimizer, seed).map_err(|e| e.to_string());
            TrialOutcome {
                problem: problem.name.clone(),
                method,
                trial,
                seed,
                result,
            }
        })
        .collect()
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
    pub trajectory_path: PathBuf,
    pub outcomes: Vec<TrialOutcome>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutput {
    pub fn failures(&self) -> impl Iterator<Item = &TrialOutcome> {
        self.outcomes.iter().filter(|o| o.result.is_err())
    }
}

/// Runs the whole experiment and writes `trace.csv`, `summary.csv` and
/// `trajectory.csv` into the output directory. The files are opened before
/// any trial starts.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let problems = config.resolve_problems()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let trace_path = dir.join("trace.csv");
    let summary_path = dir.join("summary.csv");
    let trajectory_path = dir.join("trajectory.csv");
    let trace_file = create(&trace_path)?;
    let summary_file = create(&summary_path)?;
    let trajectory_file = create(&trajectory_path)?;

    let outcomes = run_trials(config, &problems);
    let rows: Vec<TraceRow> = outcomes.iter().flat_map(TrialOutcome::rows).collect();
    let stamp = timestamp();
    write_trace(trace_file, &rows, stamp).map_err(|e| with_path(e, &trace_path))?;
    let summary = summarize_rows(&rows)?;
    write_summary(summary_file, &summary, stamp).map_err(|e| with_path(e, &summary_path))?;
    let trajectory = trajectory_rows(&rows, &config.eval_grid())?;
    write_trajectory(trajectory_file, &trajectory, stamp).map_err(|e| with_path(e, &trajectory_path))?;
    Ok(ExperimentOutput {
        trace_path,
        summary_path,
        trajectory_path,
        outcomes,
        summary,
    })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| BenchError::io(path, e))
}

fn with_path(e: BenchError, path: &Path) -> BenchError {
    match e {
        BenchError::Io { source, .. } => BenchError::io(path, source),
        other => other,
    }
}

pub fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Writes the `# generated <secs>` line. Readers skip `#` lines.
pub(crate) fn write_stamp<W: Write>(out: &mut W, stamp: u64) -> Result<()> {
    writeln!(out, "# generated {stamp}").map_err(|e| BenchError::io("<output>", e))
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow], stamp: u64) -> Result<()> {
    let mut out = BufWriter::new(out);
    write_stamp(&mut out, stamp)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.method.clone(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.event_index.to_string(),
            r.event_kind.clone(),
            r.combined_evals.to_string(),
            r.best_value.to_string(),
        ])?;
    }
    w.flush().map_err(|e| BenchError::io("<output>", e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_trace(&text)
}

/// Parses trace CSV text. Errors name the 1-based line in the text.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header_line = text.lines().position(|l| !l.starts_with('#')).map_or(1, |i| i + 1);
    let header = reader.headers().map_err(|e| parse_error(header_line, e.to_string()))?;
    if header.iter().ne(TRACE_COLUMNS) {
        return Err(parse_error(header_line, format!("expected columns {}", TRACE_COLUMNS.join(","))));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("");
        fn parsed<T: std::str::FromStr>(line: usize, name: &str, s: &str) -> Result<T> {
            s.parse().map_err(|_| parse_error(line, format!("bad {name} `{s}`")))
        }
        let method = field(1);
        if Method::parse(method).is_none() {
            return Err(parse_error(line, format!("unknown method `{method}`")));
        }
        rows.push(TraceRow {
            problem: field(0).to_string(),
            method: method.to_string(),
            trial: parsed(line, "trial", field(2))?,
            seed: parsed(line, "seed", field(3))?,
            event_index: parsed(line, "event_index", field(4))?,
            event_kind: field(5).to_string(),
            combined_evals: parsed(line, "combined_evals", field(6))?,
            best_value: parsed(line, "best_value", field(7))?,
        });
    }
    Ok(rows)
}

fn parse_error(line: usize, message: String) -> BenchError {
    BenchError::TraceParse { line, message }
}

/// Splits rows into runs of the same (problem, method, trial), in file order.
pub fn group_trials(rows: &[TraceRow]) -> Vec<&[TraceRow]> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=rows.len() {
        let boundary = i == rows.len() || {
            let (a, b) = (&rows[i - 1], &rows[i]);
            a.problem != b.problem || a.method != b.method || a.trial != b.trial
        };
        if boundary && i > start {
            groups.push(&rows[start..i]);
            start = i;
        }
    }
    groups
}
