//! Bayesian optimization over local-search-defined objectives.
//!
//! The central idea: instead of modelling a multimodal `f` directly, model
//! `F_L(x) = f(L(f, x))`, the value of the local minimum a gradient-based
//! solver reaches from `x`. `F_L` is piecewise constant over basins of
//! attraction, so a GP on it sees far fewer distinct values than a GP on `f`.
//!
//! ```
//! use bowls::{make_test_problem, run_problem, Method, OptimizerConfig, Target};
//!
//! let problem = make_test_problem("branin", None).unwrap();
//! let config = OptimizerConfig {
//!     budget: 2_000,
//!     target: problem.known_minimum.map(Target::new),
//!     ..OptimizerConfig::default()
//! };
//! let trace = run_problem(Method::Bowls, &problem, &config, 7).unwrap();
//! assert!(trace.final_best_value < 0.3985);
//! ```

pub mod acquisition;
pub mod domain;
pub mod error;
pub mod gp;
pub mod local_search;
pub mod objective;
pub mod optimizers;
pub mod problems;
pub mod rng;

pub use acquisition::{
    expected_improvement, maximize_acquisition, probability_of_improvement, AcquisitionKind, AcquisitionSpec,
    MaximizerConfig, Proposal,
};
pub use domain::BoxDomain;
pub use error::{Error, Result};
pub use gp::{fit_gp, gp_posterior, EvalDataset, GpFitConfig, GpModel, KernelConfig};
pub use local_search::{line_search, minimize_local, LineSearchOutcome, LocalSearchConfig, LocalSearchResult};
pub use objective::{combined_evals, CountedObjective, EvalCounter, FnObjective, Objective};
pub use optimizers::{
    critical_distance, eval_fl, run_bo, run_bowls, run_method, run_mlsl, run_problem, run_pure_multistart, EventKind,
    Method, MlslConfig, OptimizerConfig, RunTrace, Target, Termination, TraceEvent,
};
pub use problems::{make_test_problem, ProblemSpec, TargetSource, TEST_PROBLEMS};
pub use rng::{latin_hypercube, sample_uniform, SeededRng};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/objectives.md")]
    mod objectives {}
    #[doc = include_str!("../../../book/src/local-search.md")]
    mod local_search {}
    #[doc = include_str!("../../../book/src/gaussian-process.md")]
    mod gaussian_process {}
    #[doc = include_str!("../../../book/src/acquisition.md")]
    mod acquisition {}
    #[doc = include_str!("../../../book/src/optimizers.md")]
    mod optimizers {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
}
