use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bowls::problems::{LogisticProblem, PIMA_PROBLEM};
use bowls::{Method, OptimizerConfig, TEST_PROBLEMS};
use bowls_bench::experiment::timestamp;
use bowls_bench::{
    accuracy_curve, run_experiment, summarize, trajectory_table, write_accuracy, write_summary, write_trajectory,
    BenchError, ExperimentConfig, ExperimentOutput,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bowls", version, about = "Seeded benchmark runs for BOwLS and multi-start baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the known problems and methods.
    List,
    /// Run one problem with one method.
    Run {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        /// Seed of the first trial; trial i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Pima CSV; falls back to $PIMA_DATA, then the bundled copy.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Keep going after the known minimum is reached.
        #[arg(long)]
        no_target: bool,
    },
    /// Run every trial described by a config file.
    Bench { config: PathBuf },
    /// Test accuracy after each BOwLS local search on the Pima data.
    AccuracyCurve {
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = "results/accuracy.csv")]
        out: PathBuf,
    },
    /// Recompute the summary of a trace file and print it as CSV.
    Summarize { trace: PathBuf },
    /// Print mean and median best-so-far values on an evaluation grid.
    Trajectory {
        trace: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}

fn execute(command: Command) -> Result<(), BenchError> {
    match command {
        Command::List => {
            println!("problems:");
            for p in TEST_PROBLEMS.iter().chain([&PIMA_PROBLEM]) {
                println!("  {p}");
            }
            println!("methods:");
            for m in Method::ALL {
                println!("  {m}");
            }
            Ok(())
        }
        Command::Run {
            problem,
            method,
            budget,
            seed,
            trials,
            out,
            data,
            no_target,
        } => {
            let method =
                Method::parse(&method).ok_or_else(|| BenchError::Usage(format!("unknown method `{method}`")))?;
            let config = ExperimentConfig {
                problems: vec![problem.to_ascii_lowercase()],
                methods: vec![method],
                trials: Some(trials),
                budget,
                base_seed: seed,
                stop_at_target: !no_target,
                output_dir: out,
                data_path: data,
                ..ExperimentConfig::default()
            };
            report(run_experiment(&config)?)
        }
        Command::Bench { config } => report(run_experiment(&ExperimentConfig::from_file(config)?)?),
        Command::AccuracyCurve {
            trials,
            seed,
            budget,
            split_seed,
            data,
            out,
        } => {
            if trials == 0 {
                return Err(BenchError::Usage("trials must be at least 1".into()));
            }
            let path = ExperimentConfig {
                data_path: data,
                ..ExperimentConfig::default()
            }
            .pima_path();
            let problem = LogisticProblem::pima(&path, split_seed)?;
            let config = OptimizerConfig {
                budget,
                ..OptimizerConfig::default()
            };
            let seeds: Vec<u64> = (0..trials as u64).map(|i| seed.wrapping_add(i)).collect();
            let points = accuracy_curve(&problem, &config, &seeds)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| BenchError::Io { path: dir.into(), source: e })?;
            }
            let file = File::create(&out).map_err(|e| BenchError::Io { path: out.clone(), source: e })?;
            write_accuracy(file, &points, timestamp())?;
            let finals: Vec<f64> = (0..trials)
                .filter_map(|t| points.iter().filter(|p| p.trial == t).last().map(|p| p.test_accuracy))
                .collect();
            let mean = finals.iter().sum::<f64>() / finals.len().max(1) as f64;
            println!("{} trials on {} (data {}), mean final test accuracy {mean:.4}", trials, PIMA_PROBLEM, path.display());
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Summarize { trace } => {
            let rows = summarize(trace)?;
            write_summary(io::stdout().lock(), &rows, timestamp())
        }
        Command::Trajectory { trace, grid } => {
            let rows = trajectory_table(trace, &grid)?;
            write_trajectory(io::stdout().lock(), &rows, timestamp())
        }
    }
}

fn report(output: ExperimentOutput) -> Result<(), BenchError> {
    let mut stdout = io::stdout().lock();
    let w = |e: io::Error| BenchError::Io { path: "<stdout>".into(), source: e };
    for s in &output.summary {
        let mean = s.mean_evals_to_target.map_or_else(|| "-".to_string(), |m| format!("{m:.1}"));
        let best = s.mean_final_best.map_or_else(|| "-".to_string(), |m| format!("{m:.6}"));
        writeln!(
            stdout,
            "{:<16} {:<11} {:>3}/{:<3} reached target, mean evals {mean:>9}, mean final best {best}",
            s.problem, s.method, s.successes, s.trials
        )
        .map_err(w)?;
    }
    for f in output.failures() {
        let msg = f.result.as_ref().err().map_or("", String::as_str);
        writeln!(stdout, "failed: {} {} trial {}: {msg}", f.problem, f.method, f.trial).map_err(w)?;
    }
    writeln!(stdout, "wrote {}", output.trace_path.display()).map_err(w)?;
    writeln!(stdout, "wrote {}", output.summary_path.display()).map_err(w)?;
    writeln!(stdout, "wrote {}", output.trajectory_path.display()).map_err(w)?;
    Ok(())
}
