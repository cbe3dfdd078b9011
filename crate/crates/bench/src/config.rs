//! Experiment configuration and its flat `key = value` file format.
//!
//! ```text
//! # comment
//! problems = branin, hartmann6
//! methods = bowls, mlsl
//! trials = 50
//! trials.pima-logistic = 100
//! budget = 10000
//! base_seed = 0
//! output_dir = results
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bowls::problems::{LogisticProblem, PIMA_PROBLEM};
use bowls::{make_test_problem, AcquisitionKind, Method, OptimizerConfig, ProblemSpec, TEST_PROBLEMS};

use crate::error::{BenchError, Result};

pub const DEFAULT_TRIALS: usize = 50;
/// The logistic-regression study repeats its runs twice as often.
pub const PIMA_DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_PIMA_PATH: &str = "data/pima-indians-diabetes.csv";
pub const PIMA_ENV: &str = "PIMA_DATA";

/// Methods run when a config does not name any. Plain BO is left out since
/// it pays for one GP fit per function evaluation.
pub const DEFAULT_METHODS: [Method; 3] = [Method::Bowls, Method::Multistart, Method::Mlsl];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problems: Vec<String>,
    pub methods: Vec<Method>,
    /// `None` means 50, or 100 for the Pima problem.
    pub trials: Option<usize>,
    pub trials_per_problem: BTreeMap<String, usize>,
    pub budget: u64,
    pub base_seed: u64,
    /// Everything except budget and target, which are set per problem.
    pub optimizer: OptimizerConfig,
    /// Stop a trial once the problem's known minimum is reached.
    pub stop_at_target: bool,
    pub output_dir: PathBuf,
    pub data_path: Option<PathBuf>,
    pub split_seed: u64,
    /// Evaluation counts for the trajectory table. Empty picks 20 even steps
    /// up to the budget.
    pub grid: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problems: TEST_PROBLEMS.iter().map(|s| s.to_string()).collect(),
            methods: DEFAULT_METHODS.to_vec(),
            trials: None,
            trials_per_problem: BTreeMap::new(),
            budget: 10_000,
            base_seed: 0,
            optimizer: OptimizerConfig::default(),
            stop_at_target: true,
            output_dir: PathBuf::from("results"),
            data_path: None,
            split_seed: 0,
            grid: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn trials_for(&self, problem: &str) -> usize {
        if let Some(&n) = self.trials_per_problem.get(problem) {
            return n;
        }
        match self.trials {
            Some(n) => n,
            None if problem == PIMA_PROBLEM => PIMA_DEFAULT_TRIALS,
            None => DEFAULT_TRIALS,
        }
    }

    /// Seed of trial `index`: `base_seed + index`.
    pub fn seed_for(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }

    /// Explicit path, then `PIMA_DATA`, then the bundled copy.
    pub fn pima_path(&self) -> PathBuf {
        if let Some(p) = &self.data_path {
            return p.clone();
        }
        match std::env::var_os(PIMA_ENV) {
            Some(p) if !p.is_empty() => PathBuf::from(p),
            _ => PathBuf::from(DEFAULT_PIMA_PATH),
        }
    }

    pub fn eval_grid(&self) -> Vec<u64> {
        if !self.grid.is_empty() {
            return self.grid.clone();
        }
        let step = (self.budget / 20).max(1);
        (1..=20).map(|i| i * step).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: &str| Err(BenchError::Usage(m.to_string()));
        if self.problems.is_empty() {
            return usage("no problems given");
        }
        if self.methods.is_empty() {
            return usage("no methods given");
        }
        if self.trials == Some(0) || self.trials_per_problem.values().any(|&n| n == 0) {
            return usage("trials must be at least 1");
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return usage("grid must be strictly increasing");
        }
        for p in &self.problems {
            if p != PIMA_PROBLEM {
                make_test_problem(p, None)?;
            }
        }
        self.optimizer.validate().map_err(|e| BenchError::Usage(e.to_string()))
    }

    /// Builds every problem named in the config, loading the Pima data once.
    pub fn resolve_problems(&self) -> Result<Vec<ProblemSpec>> {
        self.problems.iter().map(|p| resolve_problem(p, &self.pima_path(), self.split_seed)).collect()
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| BenchError::Config { line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(err(format!("`{key}` already set on line {first}")));
            }
            config.set(key, value).map_err(err)?;
        }
        Ok(config)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let opt = &mut self.optimizer;
        if let Some(problem) = key.strip_prefix("trials.") {
            self.trials_per_problem.insert(problem.to_string(), num(key, value)?);
            return Ok(());
        }
        match key {
            "problems" => self.problems = list(value).into_iter().map(|s| s.to_ascii_lowercase()).collect(),
            "methods" => {
                self.methods = list(value)
                    .into_iter()
                    .map(|m| Method::parse(&m).ok_or_else(|| format!("unknown method `{m}`")))
                    .collect::<std::result::Result<_, _>>()?
            }
            "trials" => self.trials = Some(num(key, value)?),
            "budget" => self.budget = num(key, value)?,
            "base_seed" | "seed" => self.base_seed = num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "data" => self.data_path = Some(PathBuf::from(value)),
            "split_seed" => self.split_seed = num(key, value)?,
            "stop_at_target" => self.stop_at_target = flag(key, value)?,
            "grid" => {
                self.grid = list(value).iter().map(|v| num(key, v)).collect::<std::result::Result<_, _>>()?
            }
            "initial_design" => opt.initial_design = Some(num(key, value)?),
            "max_iterations" => opt.max_iterations = num(key, value)?,
            "acquisition" => {
                opt.acquisition =
                    AcquisitionKind::parse(value).ok_or_else(|| format!("unknown acquisition `{value}`"))?
            }
            "exploration" => opt.exploration = Some(num(key, value)?),
            "gp_warm_start" => opt.gp_warm_start = flag(key, value)?,
            "gp_full_refit_period" => opt.gp_full_refit_period = num(key, value)?,
            "gp_fit_noise" => opt.gp_fit.fit_noise = flag(key, value)?,
            "gp_starts" => opt.gp_fit.starts = num(key, value)?,
            "mlsl_samples_per_dimension" => opt.mlsl.samples_per_dimension = num(key, value)?,
            "mlsl_sigma" => opt.mlsl.sigma = num(key, value)?,
            "ls_gradient_tolerance" => opt.local_search.gradient_tolerance = num(key, value)?,
            "ls_max_iterations" => opt.local_search.max_iterations = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

fn list(value: &str) -> Vec<String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("`{key}`: cannot parse `{value}`"))
}

fn flag(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{key}`: expected true or false, got `{value}`")),
    }
}

/// A test-function tag or `pima-logistic`.
pub fn resolve_problem(tag: &str, pima_path: &Path, split_seed: u64) -> Result<ProblemSpec> {
    if tag == PIMA_PROBLEM {
        Ok(LogisticProblem::pima(pima_path, split_seed)?.spec())
    } else {
        Ok(make_test_problem(tag, None)?)
    }
}
