//! Seeded trial harness for the `bowls` optimizers.
//!
//! An [`ExperimentConfig`] names problems, methods and a trial count; each
//! trial `i` runs with seed `base_seed + i`. [`run_experiment`] writes three
//! CSV files: one row per optimizer event (`trace.csv`), one row per
//! (problem, method) pair (`summary.csv`), and best-so-far curves on an
//! evaluation grid (`trajectory.csv`). The summary and the curves are pure
//! functions of the trace, see [`summarize`] and [`trajectory_table`].

pub mod accuracy;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use accuracy::{accuracy_curve, write_accuracy, AccuracyPoint};
pub use config::{resolve_problem, ExperimentConfig};
pub use error::{BenchError, Result};
pub use experiment::{
    optimizer_for, parse_trace, read_trace, run_experiment, run_trials, write_trace, ExperimentOutput, TraceRow,
    TrialOutcome,
};
pub use report::{
    evals_to_target, summarize, summarize_rows, target_for, trajectory_rows, trajectory_table, write_summary,
    write_trajectory, SummaryRow, TrajectoryRow,
};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/harness.md")]
mod harness_chapter {}
