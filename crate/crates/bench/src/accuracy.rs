//! Test accuracy of the best logistic model after each BOwLS local search.

use std::io::{BufWriter, Write};

use bowls::problems::{accuracy, LogisticProblem};
use bowls::{run_method, CountedObjective, Method, OptimizerConfig, SeededRng};

use crate::error::{BenchError, Result};
use crate::experiment::write_stamp;

pub const ACCURACY_COLUMNS: [&str; 6] =
    ["trial", "seed", "local_search", "combined_evals", "best_training_loss", "test_accuracy"];

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyPoint {
    pub trial: usize,
    pub seed: u64,
    /// 1-based count of local searches so far, design included.
    pub local_search: usize,
    pub combined_evals: u64,
    pub best_training_loss: f64,
    /// Accuracy on the held-out rows of the weights behind `best_training_loss`.
    pub test_accuracy: f64,
}

/// One BOwLS run per seed, in order. Trials run sequentially since a single
/// Pima run finishes in well under a second.
pub fn accuracy_curve(problem: &LogisticProblem, config: &OptimizerConfig, seeds: &[u64]) -> Result<Vec<AccuracyPoint>> {
    let mut out = Vec::new();
    for (trial, &seed) in seeds.iter().enumerate() {
        let mut obj = CountedObjective::new(problem.objective());
        let trace = run_method(Method::Bowls, &mut obj, &problem.domain, config, &mut SeededRng::new(seed))?;
        let mut best: Option<(f64, f64)> = None;
        for (i, e) in trace.events.iter().enumerate() {
            if best.map_or(true, |(loss, _)| e.value < loss) {
                best = Some((e.value, accuracy(&e.point, &problem.test)?));
            }
            let (loss, acc) = best.unwrap();
            out.push(AccuracyPoint {
                trial,
                seed,
                local_search: i + 1,
                combined_evals: e.combined_evals,
                best_training_loss: loss,
                test_accuracy: acc,
            });
        }
    }
    Ok(out)
}

pub fn write_accuracy<W: Write>(out: W, points: &[AccuracyPoint], stamp: u64) -> Result<()> {
    let mut out = BufWriter::new(out);
    write_stamp(&mut out, stamp)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ACCURACY_COLUMNS)?;
    for p in points {
        w.write_record([
            p.trial.to_string(),
            p.seed.to_string(),
            p.local_search.to_string(),
            p.combined_evals.to_string(),
            p.best_training_loss.to_string(),
            p.test_accuracy.to_string(),
        ])?;
    }
    w.flush().map_err(|e| BenchError::io("<output>", e))
}
