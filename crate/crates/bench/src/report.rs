//! Summary statistics and best-so-far trajectories computed from traces.

use std::io::{BufWriter, Write};
use std::path::Path;

use bowls::problems::PIMA_PROBLEM;
use bowls::make_test_problem;

use crate::error::{BenchError, Result};
use crate::experiment::{group_trials, read_trace, write_stamp, TraceRow};

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "problem",
    "method",
    "trials",
    "successes",
    "mean_evals_to_target",
    "std_evals_to_target",
    "mean_final_best",
    "target",
    "target_source",
];

pub const TRAJECTORY_COLUMNS: [&str; 6] = ["problem", "method", "trials", "evals", "mean_best", "median_best"];

/// Known minimum of a problem tag with its success tolerance and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemTarget {
    pub value: f64,
    pub tolerance: f64,
    pub source: &'static str,
}

pub fn target_for(problem: &str) -> Option<ProblemTarget> {
    if problem == PIMA_PROBLEM {
        return None;
    }
    let spec = make_test_problem(problem, None).ok()?;
    Some(ProblemTarget {
        value: spec.known_minimum?,
        tolerance: spec.default_tolerance()?,
        source: spec.target_source.map_or("", |s| s.as_str()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub method: String,
    pub trials: usize,
    pub successes: usize,
    /// Over successful trials only.
    pub mean_evals_to_target: Option<f64>,
    /// Sample standard deviation; needs two successes.
    pub std_evals_to_target: Option<f64>,
    /// Over trials that finished with a finite best value.
    pub mean_final_best: Option<f64>,
    pub target: Option<f64>,
    pub target_source: Option<String>,
}

/// Evaluation count of the first row at or below `target + tolerance`.
pub fn evals_to_target(trial: &[TraceRow], target: &ProblemTarget) -> Option<u64> {
    trial
        .iter()
        .filter(|r| !r.is_failure())
        .find(|r| r.best_value <= target.value + target.tolerance)
        .map(|r| r.combined_evals)
}

pub fn mean_and_sample_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (Some(mean), Some((ss / (n - 1.0)).sqrt()))
}

/// One summary row per (problem, method), in order of first appearance.
pub fn summarize_rows(rows: &[TraceRow]) -> Result<Vec<SummaryRow>> {
    let mut out: Vec<(SummaryRow, Vec<f64>, Vec<f64>)> = Vec::new();
    for trial in group_trials(rows) {
        let first = &trial[0];
        let idx = match out.iter().position(|(s, _, _)| s.problem == first.problem && s.method == first.method) {
            Some(i) => i,
            None => {
                let target = target_for(&first.problem);
                out.push((
                    SummaryRow {
                        problem: first.problem.clone(),
                        method: first.method.clone(),
                        trials: 0,
                        successes: 0,
                        mean_evals_to_target: None,
                        std_evals_to_target: None,
                        mean_final_best: None,
                        target: target.as_ref().map(|t| t.value),
                        target_source: target.map(|t| t.source.to_string()),
                    },
                    Vec::new(),
                    Vec::new(),
                ));
                out.len() - 1
            }
        };
        let (summary, hits, finals) = &mut out[idx];
        summary.trials += 1;
        if let Some(target) = target_for(&first.problem) {
            if let Some(evals) = evals_to_target(trial, &target) {
                summary.successes += 1;
                hits.push(evals as f64);
            }
        }
        let last = trial.last().unwrap();
        if !last.is_failure() && last.best_value.is_finite() {
            finals.push(last.best_value);
        }
    }
    Ok(out
        .into_iter()
        .map(|(mut s, hits, finals)| {
            (s.mean_evals_to_target, s.std_evals_to_target) = mean_and_sample_std(&hits);
            s.mean_final_best = mean_and_sample_std(&finals).0;
            s
        })
        .collect())
}

/// Recomputes the summary from a trace file.
pub fn summarize(trace_path: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    summarize_rows(&read_trace(trace_path)?)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow], stamp: u64) -> Result<()> {
    let mut out = BufWriter::new(out);
    write_stamp(&mut out, stamp)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.method.clone(),
            r.trials.to_string(),
            r.successes.to_string(),
            cell(r.mean_evals_to_target),
            cell(r.std_evals_to_target),
            cell(r.mean_final_best),
            cell(r.target),
            r.target_source.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| BenchError::io("<output>", e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub problem: String,
    pub method: String,
    pub trials: usize,
    pub evals: u64,
    pub mean_best: f64,
    pub median_best: f64,
}

/// Best-so-far value of one trial at `evals`: the last row at or before it,
/// or the first row when the grid point precedes every event.
pub fn best_at(trial: &[TraceRow], evals: u64) -> f64 {
    trial
        .iter()
        .take_while(|r| r.combined_evals <= evals)
        .last()
        .unwrap_or(&trial[0])
        .best_value
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Mean and median best-so-far over trials at each grid point, per
/// (problem, method). Failed trials are left out.
pub fn trajectory_rows(rows: &[TraceRow], grid: &[u64]) -> Result<Vec<TrajectoryRow>> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BenchError::Usage("grid must be strictly increasing".into()));
    }
    let mut pairs: Vec<(String, String, Vec<&[TraceRow]>)> = Vec::new();
    for trial in group_trials(rows) {
        if trial.iter().any(TraceRow::is_failure) {
            continue;
        }
        let (p, m) = (&trial[0].problem, &trial[0].method);
        match pairs.iter_mut().find(|(a, b, _)| a == p && b == m) {
            Some((_, _, trials)) => trials.push(trial),
            None => pairs.push((p.clone(), m.clone(), vec![trial])),
        }
    }
    let mut out = Vec::new();
    for (problem, method, trials) in pairs {
        for &g in grid {
            let mut values: Vec<f64> = trials.iter().map(|t| best_at(t, g)).collect();
            let mean_best = values.iter().sum::<f64>() / values.len() as f64;
            out.push(TrajectoryRow {
                problem: problem.clone(),
                method: method.clone(),
                trials: trials.len(),
                evals: g,
                mean_best,
                median_best: median(&mut values),
            });
        }
    }
    Ok(out)
}

pub fn trajectory_table(trace_path: impl AsRef<Path>, grid: &[u64]) -> Result<Vec<TrajectoryRow>> {
    trajectory_rows(&read_trace(trace_path)?, grid)
}

pub fn write_trajectory<W: Write>(out: W, rows: &[TrajectoryRow], stamp: u64) -> Result<()> {
    let mut out = BufWriter::new(out);
    write_stamp(&mut out, stamp)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.method.clone(),
            r.trials.to_string(),
            r.evals.to_string(),
            r.mean_best.to_string(),
            r.median_best.to_string(),
        ])?;
    }
    w.flush().map_err(|e| BenchError::io("<output>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(trial: usize, evals: u64, best: f64) -> TraceRow {
        TraceRow {
            problem: "branin".into(),
            method: "mlsl".into(),
            trial,
            seed: trial as u64,
            event_index: 0,
            event_kind: "local-search".into(),
            combined_evals: evals,
            best_value: best,
        }
    }

    #[test]
    fn two_successes_give_mean_and_sample_std() {
        let rows = vec![row(0, 100, 0.3979), row(1, 50, 2.0), row(1, 300, 0.398)];
        let s = &summarize_rows(&rows).unwrap()[0];
        assert_eq!((s.trials, s.successes), (2, 2));
        assert_eq!(s.mean_evals_to_target, Some(200.0));
        assert!((s.std_evals_to_target.unwrap() - 141.42135623730951).abs() < 1e-9);
        assert_eq!(s.target_source.as_deref(), Some("table1"));
    }

    #[test]
    fn misses_are_excluded_from_the_statistics() {
        let rows = vec![row(0, 100, 0.3979), row(1, 500, 5.0)];
        let s = &summarize_rows(&rows).unwrap()[0];
        assert_eq!((s.trials, s.successes), (2, 1));
        assert_eq!(s.mean_evals_to_target, Some(100.0));
        assert_eq!(s.std_evals_to_target, None);
        assert!((s.mean_final_best.unwrap() - (0.3979 + 5.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn trajectory_is_a_step_function() {
        let rows = vec![row(0, 10, 5.0), row(0, 50, 1.0)];
        let t = trajectory_rows(&rows, &[10, 30, 50]).unwrap();
        let values: Vec<f64> = t.iter().map(|r| r.mean_best).collect();
        assert_eq!(values, [5.0, 5.0, 1.0]);
        // Before the first event the first value stands in.
        assert_eq!(trajectory_rows(&rows, &[1]).unwrap()[0].mean_best, 5.0);
    }

    #[test]
    fn identical_trials_average_to_either() {
        let rows = vec![row(0, 10, 5.0), row(0, 50, 1.0), row(1, 10, 5.0), row(1, 50, 1.0)];
        let both = trajectory_rows(&rows, &[10, 30, 50]).unwrap();
        let one = trajectory_rows(&rows[..2], &[10, 30, 50]).unwrap();
        for (a, b) in both.iter().zip(&one) {
            assert_eq!(a.mean_best, b.mean_best);
            assert_eq!(a.median_best, b.median_best);
        }
    }

    #[test]
    fn median_of_even_count_averages_the_middle() {
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn pima_has_no_target() {
        assert!(target_for(PIMA_PROBLEM).is_none());
        assert_eq!(target_for("price").unwrap().source, "derived");
    }
}
