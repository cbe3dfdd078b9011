//! Optimization drivers.
//!
//! * [`run_bowls`] runs Bayesian optimization on the local-search-defined
//!   function `F_L(x) = f(L(f, x))`: every query is a full local search from
//!   the proposed start, and the GP is trained on `(start, local minimum)`
//!   pairs.
//! * [`run_bo`] is plain Bayesian optimization on `f`.
//! * [`run_pure_multistart`] runs local searches from uniform random starts.
//! * [`run_mlsl`] is multi-level single linkage.
//!
//! Budgets are in combined evaluations (`n_f + n_g`) and are checked between
//! local searches, so a search that has started always finishes. GP fitting
//! and acquisition maximization never touch the objective and cost nothing.

use std::fmt;

use crate::acquisition::{maximize_acquisition, AcquisitionKind, AcquisitionSpec, MaximizerConfig};
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::gp::{fit_gp, EvalDataset, GpFitConfig, KernelConfig};
use crate::local_search::{minimize_local, LocalSearchConfig};
use crate::objective::{CountedObjective, EvalCounter, Objective};
use crate::problems::ProblemSpec;
use crate::rng::{sample_uniform, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Bowls,
    Bo,
    Multistart,
    Mlsl,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Bowls, Method::Bo, Method::Multistart, Method::Mlsl];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Bowls => "bowls",
            Method::Bo => "bo",
            Method::Multistart => "multistart",
            Method::Mlsl => "mlsl",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s.to_ascii_lowercase())
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Design,
    LocalSearch,
    BoQuery,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Design => "design",
            EventKind::LocalSearch => "local-search",
            EventKind::BoQuery => "bo-query",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Budget,
    TargetReached,
    MaxIterations,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Budget => "budget",
            Termination::TargetReached => "target-reached",
            Termination::MaxIterations => "max-iterations",
        }
    }
}

/// One step of a run that spent evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub kind: EventKind,
    /// Combined evaluations spent when the event completed.
    pub combined_evals: u64,
    /// Value this event observed (a local minimum, a query value, or the
    /// best of a sample batch).
    pub value: f64,
    pub best_value: f64,
    /// Where `value` was observed.
    pub point: Vec<f64>,
}

/// Everything a single run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub method: Method,
    pub problem: String,
    pub seed: u64,
    pub events: Vec<TraceEvent>,
    pub final_best_value: f64,
    pub final_best_point: Vec<f64>,
    pub termination: Termination,
    pub evals: EvalCounter,
    /// Local searches (or queries) performed.
    pub iterations: usize,
    pub plateau_fallbacks: usize,
    pub model_failures: usize,
    pub local_search_failures: usize,
    pub notes: Vec<String>,
}

impl RunTrace {
    fn new(method: Method, seed: u64) -> Self {
        RunTrace {
            method,
            problem: String::new(),
            seed,
            events: Vec::new(),
            final_best_value: f64::INFINITY,
            final_best_point: Vec::new(),
            termination: Termination::Budget,
            evals: EvalCounter::default(),
            iterations: 0,
            plateau_fallbacks: 0,
            model_failures: 0,
            local_search_failures: 0,
            notes: Vec::new(),
        }
    }

    pub fn combined_evals(&self) -> u64 {
        self.evals.combined()
    }

    fn record(&mut self, kind: EventKind, combined_evals: u64, value: f64, point: Vec<f64>) {
        if value < self.final_best_value {
            self.final_best_value = value;
            self.final_best_point = point.clone();
        }
        self.events.push(TraceEvent {
            kind,
            combined_evals,
            value,
            best_value: self.final_best_value,
            point,
        });
    }
}

/// Early-stop target: stop once the best value is `≤ value + tolerance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub value: f64,
    pub tolerance: f64,
}

impl Target {
    /// Uses the default tolerance `1e-3 · (1 + |value|)`.
    pub fn new(value: f64) -> Self {
        Target {
            value,
            tolerance: 1e-3 * (1.0 + value.abs()),
        }
    }

    pub fn with_tolerance(value: f64, tolerance: f64) -> Self {
        Target { value, tolerance }
    }

    pub fn reached(&self, best: f64) -> bool {
        best <= self.value + self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlslConfig {
    /// Samples per iteration are `samples_per_dimension × n`.
    pub samples_per_dimension: usize,
    pub sigma: f64,
}

impl Default for MlslConfig {
    fn default() -> Self {
        MlslConfig {
            samples_per_dimension: 10,
            sigma: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Initial design size; `None` means `max(5, 2n)`.
    pub initial_design: Option<usize>,
    /// Cap on combined evaluations.
    pub budget: u64,
    /// Cap on local searches (or queries), design included.
    pub max_iterations: usize,
    pub target: Option<Target>,
    pub acquisition: AcquisitionKind,
    /// PI margin or confidence multiplier; `None` uses the defaults.
    pub exploration: Option<f64>,
    pub local_search: LocalSearchConfig,
    pub maximizer: MaximizerConfig,
    pub gp_fit: GpFitConfig,
    /// Seed each GP fit with the previous fit's hyperparameters.
    pub gp_warm_start: bool,
    /// With a warm start available, only every this-many-th fit also runs
    /// the random multi-start search; the others polish the previous
    /// hyperparameters alone. `1` runs the full search every time.
    pub gp_full_refit_period: usize,
    pub mlsl: MlslConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            initial_design: None,
            budget: 10_000,
            max_iterations: 500,
            target: None,
            acquisition: AcquisitionKind::ExpectedImprovement,
            exploration: None,
            local_search: LocalSearchConfig::default(),
            maximizer: MaximizerConfig::default(),
            // F_L jumps between basins; letting the likelihood attribute the
            // jumps to noise keeps the length scales on the large-scale trend.
            gp_fit: GpFitConfig {
                fit_noise: true,
                ..GpFitConfig::default()
            },
            gp_warm_start: true,
            gp_full_refit_period: 10,
            mlsl: MlslConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn initial_design_size(&self, dimension: usize) -> usize {
        self.initial_design.unwrap_or_else(|| (2 * dimension).max(5))
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_design.is_some_and(|n| n < 2) {
            return Err(Error::InvalidArgument("initial design needs at least 2 points".into()));
        }
        if self.gp_full_refit_period == 0 {
            return Err(Error::InvalidArgument("full refit period must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max iterations must be positive".into()));
        }
        if self.mlsl.samples_per_dimension == 0 || !(self.mlsl.sigma > 0.0) {
            return Err(Error::InvalidArgument("invalid MLSL settings".into()));
        }
        self.local_search.validate()
    }
}

/// `F_L(x)`: runs the local solver from `x` and returns the local minimum
/// value together with the minimizer. The value never exceeds `f(x)`.
pub fn eval_fl<O: Objective>(
    obj: &mut CountedObjective<O>,
    x: &[f64],
    domain: &BoxDomain,
    config: &LocalSearchConfig,
) -> Result<(f64, Vec<f64>)> {
    let result = minimize_local(obj, x, domain, config)?;
    Ok((result.f_star, result.x_star))
}

fn check_problem<O: Objective>(obj: &CountedObjective<O>, domain: &BoxDomain, config: &OptimizerConfig) -> Result<()> {
    config.validate()?;
    if obj.dimension() != domain.dimension() {
        return Err(Error::DimensionMismatch {
            expected: domain.dimension(),
            got: obj.dimension(),
        });
    }
    Ok(())
}

/// Shared stopping rule: target first, then budget, then iteration cap.
fn should_stop<O: Objective>(
    obj: &CountedObjective<O>,
    trace: &RunTrace,
    config: &OptimizerConfig,
) -> Option<Termination> {
    if config.target.is_some_and(|t| t.reached(trace.final_best_value)) {
        Some(Termination::TargetReached)
    } else if obj.combined_evals() >= config.budget {
        Some(Termination::Budget)
    } else if trace.iterations >= config.max_iterations {
        Some(Termination::MaxIterations)
    } else {
        None
    }
}

fn finish<O: Objective>(mut trace: RunTrace, obj: &CountedObjective<O>, start: EvalCounter, why: Termination) -> RunTrace {
    trace.evals = obj.counter().since(&start);
    trace.termination = why;
    trace
}

/// Which function a model-guided driver queries.
#[derive(Clone, Copy, PartialEq)]
enum Query {
    LocalSearch,
    Value,
}

/// Common loop for BOwLS and BO: an initial uniform design, then GP-guided
/// queries until a stopping rule fires.
fn run_model_guided<O: Objective>(
    method: Method,
    query: Query,
    obj: &mut CountedObjective<O>,
    domain: &BoxDomain,
    config: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<RunTrace> {
    check_problem(obj, domain, config)?;
    let start = obj.counter();
    let mut trace = RunTrace::new(method, rng.seed());
    let budget_config = relative_budget(config, &start);
    let mut data = EvalDataset::new();
    let guided_kind = match query {
        Query::LocalSearch => EventKind::LocalSearch,
        Query::Value => EventKind::BoQuery,
    };

    let n0 = config.initial_design_size(domain.dimension());
    for x in sample_uniform(domain, n0, rng) {
        if let Some(why) = should_stop(obj, &trace, &budget_config) {
            return Ok(finish(trace, obj, start, why));
        }
        query_at(query, obj, domain, config, &start, &mut trace, &mut data, x, EventKind::Design);
    }

    let mut warm: Option<KernelConfig> = None;
    let mut fits = 0usize;
    loop {
        if let Some(why) = should_stop(obj, &trace, &budget_config) {
            return Ok(finish(trace, obj, start, why));
        }
        let next = if data.len() >= 2 {
            let mut gp_config = config.gp_fit.clone();
            gp_config.warm_start = warm.clone();
            if warm.is_some() && fits % config.gp_full_refit_period != 0 {
                gp_config.starts = 0;
            }
            fits += 1;
            match fit_gp(&data, domain, &gp_config, rng) {
                Ok(model) => {
                    if config.gp_warm_start && !model.is_constant() {
                        warm = Some(model.kernel().clone());
                    }
                    let spec = AcquisitionSpec::for_values(config.acquisition, config.exploration, data.values())?;
                    let proposal = maximize_acquisition(&model, &spec, domain, &config.maximizer, rng)?;
                    if proposal.plateau {
                        trace.plateau_fallbacks += 1;
                    }
                    proposal.point
                }
                Err(e) => {
                    trace.model_failures += 1;
                    trace.notes.push(format!("model update skipped: {e}"));
                    rng.point_in(domain)
                }
            }
        } else {
            rng.point_in(domain)
        };
        query_at(query, obj, domain, config, &start, &mut trace, &mut data, next, guided_kind);
    }
}

#[allow(clippy::too_many_arguments)]
fn query_at<O: Objective>(
    query: Query,
    obj: &mut CountedObjective<O>,
    domain: &BoxDomain,
    config: &OptimizerConfig,
    start: &EvalCounter,
    trace: &mut RunTrace,
    data: &mut EvalDataset,
    x: Vec<f64>,
    kind: EventKind,
) {
    trace.iterations += 1;
    let outcome = match query {
        Query::LocalSearch => eval_fl(obj, &x, domain, &config.local_search),
        Query::Value => obj.evaluate(&x).map(|v| (v, x.clone())),
    };
    match outcome {
        Ok((y, at)) => {
            // The model is trained on the start point, not the minimizer it led to.
            if let Err(e) = data.push(x, y) {
                trace.notes.push(format!("observation dropped: {e}"));
            }
            let spent = obj.counter().since(start).combined();
            trace.record(kind, spent, y, at);
        }
        Err(e) => {
            trace.local_search_failures += 1;
            trace.notes.push(format!("query failed: {e}"));
        }
    }
}

/// Bayesian optimization over `F_L`.
///
/// Draws `N₀` uniform starts and runs a local search from each, then
/// repeatedly fits a GP to the `(start, local minimum)` pairs, maximizes the
/// acquisition to pick the next start, and runs a local search from it.
/// Returns the smallest local minimum found. If the GP cannot be fitted the
/// next start is drawn uniformly and the failure is noted in the trace.
pub fn run_bowls<O: Objective>(
    obj: &mut CountedObjective<O>,
    domain: &BoxDomain,
    config: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<RunTrace> {
    run_model_guided(Method::Bowls, Query::LocalSearch, obj, domain, config, rng)
}

/// Standard Bayesian optimization: each query is a single evaluation of `f`.
pub fn run_bo<O: Objective>(
    obj: &mut CountedObjective<O>,
    domain: &BoxDomain,
    config: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<RunTrace> {
    run_model_guided(Method::Bo, Query::Value, obj, domain, config, rng)
}

/// Local searches from independent uniform starts.
pub fn run_pure_multistart<O: Objective>(
    obj: &mut CountedObjective<O>,
    domain: &BoxDomain,
    config: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<RunTrace> {
    check_problem(obj, domain, config)?;
    let start = obj.counter();
    let mut trace = RunTrace::new(Method::Multistart, rng.seed());
    let budget_config = relative_budget(config, &start);
    loop {
        if let Some(why) = should_stop(obj, &trace, &budget_config) {
            return Ok(finish(trace, obj, start, why));
        }
        let x = rng.point_in(domain);
        trace.iterations += 1;
        match eval_fl(obj, &x, domain, &config.local_search) {
            Ok((y, at)) => {
                let spent = obj.counter().since(&start).combined();
                trace.record(EventKind::LocalSearch, spent, y, at);
            }
            Err(e) => {
                trace.local_search_failures += 1;
                trace.notes.push(format!("local search failed: {e}"));
            }
        }
    }
}

/// A config whose budget is shifted by evaluations spent before the run
/// started, so that [`should_stop`] can read the raw counter.
fn relative_budget(config: &OptimizerConfig, start: &EvalCounter) -> OptimizerConfig {
    let mut c = config.clone();
    c.budget = config.budget.saturating_add(start.combined());
    c
}

/// MLSL critical distance
/// `r_k = π^{-1/2} (Γ(1 + n/2) · vol(Ω) · σ · ln(k)/k)^{1/n}`.
pub fn critical_distance(dimension: usize, volume: f64, sigma: f64, k: usize) -> f64 {
    let n = dimension as f64;
    let k = k.max(1) as f64;
    let inner = libm::tgamma(1.0 + n / 2.0) * volume * sigma * k.ln() / k;
    (inner.max(0.0)).powf(1.0 / n) / std::f64::consts::PI.sqrt()
}

/// Multi-level single linkage.
///
/// Iteration `k` draws `samples_per_dimension × n` uniform points and
/// evaluates `f` at each. Every sample that has not yet been used as a start
/// then spawns a local search unless some other sample within
/// [`critical_distance`] has a lower value. Candidates are tried in order of
/// increasing value.
pub fn run_mlsl<O: Objective>(
    obj: &mut CountedObjective<O>,
    domain: &BoxDomain,
    config: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<RunTrace> {
    check_problem(obj, domain, config)?;
    let start = obj.counter();
    let mut trace = RunTrace::new(Method::Mlsl, rng.seed());
    let budget_config = relative_budget(config, &start);
    let n = domain.dimension();
    let batch = config.mlsl.samples_per_dimension * n;
    let volume = domain.volume();

    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut started: Vec<bool> = Vec::new();
    // Squared distance from each sample to its nearest strictly better sample.
    let mut nearest_better: Vec<f64> = Vec::new();
    let mut k = 0usize;

    loop {
        k += 1;
        let first_new = points.len();
        let mut batch_best: Option<(f64, Vec<f64>)> = None;
        for x in sample_uniform(domain, batch, rng) {
            if obj.combined_evals() >= budget_config.budget {
                break;
            }
            match obj.evaluate(&x) {
                Ok(v) => {
                    if batch_best.as_ref().map_or(true, |(b, _)| v < *b) {
                        batch_best = Some((v, x.clone()));
                    }
                    points.push(x);
                    values.push(v);
                    started.push(false);
                    nearest_better.push(f64::INFINITY);
                }
                Err(e) => trace.notes.push(format!("sample skipped: {e}")),
            }
        }
        if let Some((v, x)) = batch_best {
            let spent = obj.counter().since(&start).combined();
            trace.record(EventKind::Design, spent, v, x);
        }
        for i in first_new..points.len() {
            for j in 0..i {
                let d2 = squared_distance(&points[i], &points[j]);
                if values[j] < values[i] {
                    nearest_better[i] = nearest_better[i].min(d2);
                } else if values[i] < values[j] {
                    nearest_better[j] = nearest_better[j].min(d2);
                }
            }
        }

        let radius = critical_distance(n, volume, config.mlsl.sigma, k);
        let r2 = radius * radius;
        let mut order: Vec<usize> = (0..values.len()).filter(|&i| !started[i] && nearest_better[i] > r2).collect();
        order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));

        for i in order {
            if let Some(why) = should_stop(obj, &trace, &budget_config) {
                return Ok(finish(trace, obj, start, why));
            }
            started[i] = true;
            trace.iterations += 1;
            match eval_fl(obj, &points[i], domain, &config.local_search) {
                Ok((y, at)) => {
                    let spent = obj.counter().since(&start).combined();
                    trace.record(EventKind::LocalSearch, spent, y, at);
                }
                Err(e) => {
                    trace.local_search_failures += 1;
                    trace.notes.push(format!("local search failed: {e}"));
                }
            }
        }

        if let Some(why) = should_stop(obj, &trace, &budget_config) {
            return Ok(finish(trace, obj, start, why));
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Dispatches to the driver for `method`.
pub fn run_method<O: Objective>(
    method: Method,
    obj: &mut CountedObjective<O>,
    domain: &BoxDomain,
    config: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<RunTrace> {
    match method {
        Method::Bowls => run_bowls(obj, domain, config, rng),
        Method::Bo => run_bo(obj, domain, config, rng),
        Method::Multistart => run_pure_multistart(obj, domain, config, rng),
        Method::Mlsl => run_mlsl(obj, domain, config, rng),
    }
}

/// Runs `method` on a fresh counted copy of `problem` with its own seeded stream.
pub fn run_problem(method: Method, problem: &ProblemSpec, config: &OptimizerConfig, seed: u64) -> Result<RunTrace> {
    let mut obj = CountedObjective::new(problem.objective.clone());
    let mut rng = SeededRng::new(seed);
    let mut trace = run_method(method, &mut obj, &problem.domain, config, &mut rng)?;
    trace.problem = problem.name.clone();
    Ok(trace)
}
