//! Box-constrained Polak–Ribière+ conjugate gradient.
//!
//! Iterates never leave the box: line-search probes are capped at the first
//! bound the search direction hits, coordinates sitting on a bound with the
//! gradient pushing outward are frozen, and convergence is measured on the
//! projected gradient. The direction is reset to steepest descent every
//! `restart_period` iterations, whenever the active set changes, and
//! whenever the conjugate direction fails to descend.
//!
//! The reported minimizer is the lowest point the search ever evaluated, so
//! the returned value is always a genuine objective value and never exceeds
//! the value at the start.

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::objective::{CountedObjective, EvalCounter, Objective};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchConfig {
    /// Infinity-norm tolerance on the projected gradient.
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Armijo constant `c1`.
    pub sufficient_decrease: f64,
    /// Strong Wolfe curvature constant `c2`.
    pub curvature: f64,
    /// Steepest-descent restart period; `None` means the problem dimension.
    pub restart_period: Option<usize>,
    /// Bracketing expansions before the line search gives up.
    pub max_expansions: usize,
    /// Interval-shrinking iterations inside the bracket.
    pub max_zoom: usize,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        LocalSearchConfig {
            gradient_tolerance: 1e-6,
            max_iterations: 200,
            sufficient_decrease: 1e-4,
            curvature: 0.4,
            restart_period: None,
            max_expansions: 20,
            max_zoom: 30,
        }
    }
}

impl LocalSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidArgument("gradient tolerance must be positive".into()));
        }
        if !(0.0 < self.sufficient_decrease
            && self.sufficient_decrease < self.curvature
            && self.curvature < 1.0)
        {
            return Err(Error::InvalidArgument(
                "line search needs 0 < sufficient_decrease < curvature < 1".into(),
            ));
        }
        if self.restart_period == Some(0) {
            return Err(Error::InvalidArgument("restart period must be positive".into()));
        }
        Ok(())
    }
}

/// What a local search returns: the pair `(x*, f(x*))` plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchResult {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub iterations: usize,
    pub converged: bool,
    pub evals_spent: EvalCounter,
}

/// An accepted line-search step.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub step: f64,
    pub point: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    /// The step was cut short by the box.
    pub truncated: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest step along `direction` that keeps `x + step * direction` in the box.
pub fn max_feasible_step(domain: &BoxDomain, x: &[f64], direction: &[f64]) -> f64 {
    let mut step = f64::INFINITY;
    for (i, d) in direction.iter().enumerate() {
        if *d > 0.0 {
            step = step.min((domain.upper()[i] - x[i]) / d);
        } else if *d < 0.0 {
            step = step.min((domain.lower()[i] - x[i]) / d);
        }
    }
    step.max(0.0)
}

#[derive(Clone)]
struct Probe {
    step: f64,
    value: f64,
    point: Vec<f64>,
    gradient: Option<Vec<f64>>,
    slope: f64,
}

struct LineSearch<'a, O> {
    obj: &'a mut CountedObjective<O>,
    domain: &'a BoxDomain,
    x: &'a [f64],
    direction: &'a [f64],
    f0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
    step_max: f64,
    max_expansions: usize,
    max_zoom: usize,
}

impl<O: Objective> LineSearch<'_, O> {
    fn point_at(&self, step: f64) -> Vec<f64> {
        let mut p: Vec<f64> = self
            .x
            .iter()
            .zip(self.direction)
            .map(|(x, d)| x + step * d)
            .collect();
        self.domain.project(&mut p);
        p
    }

    fn value_probe(&mut self, step: f64) -> Result<Probe> {
        let point = self.point_at(step);
        let value = self.obj.evaluate(&point)?;
        Ok(Probe {
            step,
            value,
            point,
            gradient: None,
            slope: f64::NAN,
        })
    }

    fn add_gradient(&mut self, probe: &mut Probe) -> Result<()> {
        let g = self.obj.gradient_or_fd(&probe.point)?;
        probe.slope = dot(&g, self.direction);
        probe.gradient = Some(g);
        Ok(())
    }

    fn armijo_ok(&self, p: &Probe) -> bool {
        p.value <= self.f0 + self.c1 * p.step * self.slope0
    }

    fn curvature_ok(&self, p: &Probe) -> bool {
        p.slope.abs() <= -self.c2 * self.slope0
    }

    fn accept(p: Probe, truncated: bool) -> LineSearchOutcome {
        LineSearchOutcome {
            step: p.step,
            point: p.point,
            value: p.value,
            gradient: p.gradient.expect("accepted probes carry a gradient"),
            truncated,
        }
    }

    fn run(mut self, initial_step: f64) -> Result<LineSearchOutcome> {
        let origin = Probe {
            step: 0.0,
            value: self.f0,
            point: self.x.to_vec(),
            gradient: None,
            slope: self.slope0,
        };
        let mut prev = origin;
        let mut best_armijo: Option<Probe> = None;
        let mut step = if initial_step > 0.0 && initial_step.is_finite() {
            initial_step.min(self.step_max)
        } else {
            self.step_max.min(1.0)
        };

        for i in 0..self.max_expansions {
            let mut cur = self.value_probe(step)?;
            if !self.armijo_ok(&cur) || (i > 0 && cur.value >= prev.value) {
                return self.zoom(prev, cur, best_armijo);
            }
            self.add_gradient(&mut cur)?;
            if self.curvature_ok(&cur) {
                return Ok(Self::accept(cur, false));
            }
            if cur.slope >= 0.0 {
                return self.zoom(cur, prev, best_armijo);
            }
            if best_armijo.as_ref().map_or(true, |b| cur.value < b.value) {
                best_armijo = Some(cur.clone());
            }
            if step >= self.step_max {
                // Still descending at the boundary: take the truncated step.
                return Ok(Self::accept(cur, true));
            }
            prev = cur;
            step = (2.0 * step).min(self.step_max);
        }
        best_armijo
            .map(|p| Self::accept(p, false))
            .ok_or(Error::LineSearch)
    }

    /// Shrinks `[lo, hi]` (in either order). `lo` always satisfies the
    /// Armijo condition, has the lowest value seen in the bracket and
    /// carries a slope.
    fn zoom(
        &mut self,
        mut lo: Probe,
        mut hi: Probe,
        mut best_armijo: Option<Probe>,
    ) -> Result<LineSearchOutcome> {
        for _ in 0..self.max_zoom {
            let (a, b) = (lo.step, hi.step);
            let width = (b - a).abs();
            if width <= 1e-14 * a.abs().max(b.abs()).max(1e-300) {
                break;
            }
            let span = b - a;
            let curv = (hi.value - lo.value - lo.slope * span) / (span * span);
            let mut trial = if curv > 0.0 {
                a - lo.slope / (2.0 * curv)
            } else {
                f64::NAN
            };
            let (left, right) = (a.min(b), a.max(b));
            if !(trial > left + 0.1 * width && trial < right - 0.1 * width) {
                trial = 0.5 * (a + b);
            }

            let mut cur = self.value_probe(trial)?;
            if !self.armijo_ok(&cur) || cur.value >= lo.value {
                hi = cur;
                continue;
            }
            self.add_gradient(&mut cur)?;
            if self.curvature_ok(&cur) {
                return Ok(Self::accept(cur, false));
            }
            if best_armijo.as_ref().map_or(true, |b| cur.value < b.value) {
                best_armijo = Some(cur.clone());
            }
            if cur.slope * (hi.step - lo.step) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
        if lo.step > 0.0 && lo.gradient.is_some() {
            if best_armijo.as_ref().map_or(true, |b| lo.value <= b.value) {
                return Ok(Self::accept(lo, false));
            }
        }
        best_armijo
            .map(|p| Self::accept(p, false))
            .ok_or(Error::LineSearch)
    }
}

/// Strong-Wolfe line search from `x` along `direction`, capped at the box.
///
/// `f_x` and `g_x` are the value and gradient at `x`. Probes start at
/// `initial_step` and double until the minimum is bracketed; the bracket is
/// then shrunk by safeguarded quadratic interpolation. When the first bound
/// is reached while the function is still decreasing, the truncated step is
/// returned. If no Wolfe point is found the lowest Armijo point is used, and
/// if there is none the search fails with [`Error::LineSearch`].
#[allow(clippy::too_many_arguments)]
pub fn line_search<O: Objective>(
    obj: &mut CountedObjective<O>,
    domain: &BoxDomain,
    x: &[f64],
    direction: &[f64],
    f_x: f64,
    g_x: &[f64],
    initial_step: f64,
    config: &LocalSearchConfig,
) -> Result<LineSearchOutcome> {
    domain.check_dimension(x)?;
    domain.check_dimension(direction)?;
    let slope0 = dot(g_x, direction);
    if !(slope0 < 0.0) {
        return Err(Error::InvalidArgument("line search needs a descent direction".into()));
    }
    let step_max = max_feasible_step(domain, x, direction);
    if step_max <= 0.0 {
        return Err(Error::LineSearch);
    }
    let ls = LineSearch {
        obj,
        domain,
        x,
        direction,
        f0: f_x,
        slope0,
        c1: config.sufficient_decrease,
        c2: config.curvature,
        step_max,
        max_expansions: config.max_expansions,
        max_zoom: config.max_zoom,
    };
    ls.run(initial_step)
}

/// Coordinates held at a bound because the gradient pushes outward.
fn active_set(domain: &BoxDomain, x: &[f64], g: &[f64]) -> Vec<bool> {
    (0..x.len())
        .map(|i| {
            (x[i] <= domain.lower()[i] && g[i] > 0.0) || (x[i] >= domain.upper()[i] && g[i] < 0.0)
        })
        .collect()
}

fn projected_gradient(active: &[bool], g: &[f64]) -> Vec<f64> {
    g.iter()
        .zip(active)
        .map(|(v, a)| if *a { 0.0 } else { *v })
        .collect()
}

/// Zeroes direction components that would immediately leave the box.
fn clip_direction(domain: &BoxDomain, x: &[f64], d: &mut [f64]) {
    for i in 0..d.len() {
        if (x[i] <= domain.lower()[i] && d[i] < 0.0) || (x[i] >= domain.upper()[i] && d[i] > 0.0) {
            d[i] = 0.0;
        }
    }
}

/// Runs the local solver from `x0` and returns the local minimizer it reaches.
///
/// Every oracle call goes through `obj`, so its counters reflect the full
/// cost of the search. A search that stops on the iteration cap or a failed
/// line search still returns its best point, with `converged = false`.
pub fn minimize_local<O: Objective>(
    obj: &mut CountedObjective<O>,
    x0: &[f64],
    domain: &BoxDomain,
    config: &LocalSearchConfig,
) -> Result<LocalSearchResult> {
    config.validate()?;
    domain.check_dimension(x0)?;
    if obj.dimension() != domain.dimension() {
        return Err(Error::DimensionMismatch {
            expected: domain.dimension(),
            got: obj.dimension(),
        });
    }
    if !domain.contains(x0) {
        return Err(Error::InvalidArgument(format!("start {x0:?} lies outside the box")));
    }

    let start_counter = obj.counter();
    obj.reset_window();
    let failed = |point: &[f64], reason: String| Error::LocalSearch {
        start: x0.to_vec(),
        point: point.to_vec(),
        reason,
    };

    let n = x0.len();
    let restart_period = config.restart_period.unwrap_or(n).max(1);
    let mut x = x0.to_vec();
    let mut f = obj.evaluate(&x).map_err(|e| failed(&x, e.to_string()))?;
    let mut g = obj.gradient_or_fd(&x).map_err(|e| failed(&x, e.to_string()))?;

    let mut iterations = 0;
    let mut converged = false;
    let mut since_restart = 0usize;
    let mut force_restart = true;
    let mut prev: Option<(Vec<f64>, Vec<f64>, Vec<bool>, f64)> = None; // (g, d, active, g·d)
    let mut last_step = 0.0;

    loop {
        let active = active_set(domain, &x, &g);
        let pg = projected_gradient(&active, &g);
        if inf_norm(&pg) <= config.gradient_tolerance {
            converged = true;
            break;
        }
        if iterations >= config.max_iterations {
            break;
        }

        let mut steepest = force_restart || since_restart >= restart_period;
        let mut d: Vec<f64> = pg.iter().map(|v| -v).collect();
        if let Some((g_prev, d_prev, active_prev, _)) = &prev {
            if *active_prev != active {
                steepest = true;
            }
            if !steepest {
                let denom: f64 = (0..n).filter(|i| !active[*i]).map(|i| g_prev[i] * g_prev[i]).sum();
                let numer: f64 = (0..n)
                    .filter(|i| !active[*i])
                    .map(|i| g[i] * (g[i] - g_prev[i]))
                    .sum();
                let beta = if denom > 0.0 { (numer / denom).max(0.0) } else { 0.0 };
                for i in 0..n {
                    if !active[i] {
                        d[i] = -g[i] + beta * d_prev[i];
                    }
                }
            }
        }
        clip_direction(domain, &x, &mut d);
        if !(dot(&g, &d) < 0.0) {
            steepest = true;
            d = pg.iter().map(|v| -v).collect();
            clip_direction(domain, &x, &mut d);
        }
        if steepest {
            since_restart = 0;
        }
        let slope = dot(&g, &d);
        if !(slope < 0.0) {
            // Only outward-pointing components remain: a boundary stationary point.
            converged = true;
            break;
        }

        let initial_step = match &prev {
            Some((_, _, _, prev_slope)) if last_step > 0.0 => last_step * prev_slope / slope,
            _ => (1.0 / inf_norm(&d)).min(1.0),
        };

        match line_search(obj, domain, &x, &d, f, &g, initial_step, config) {
            Ok(step) => {
                prev = Some((std::mem::take(&mut g), d, active, slope));
                x = step.point;
                f = step.value;
                g = step.gradient;
                last_step = step.step;
                force_restart = false;
                since_restart += 1;
                iterations += 1;
            }
            Err(Error::LineSearch) | Err(Error::InvalidArgument(_)) => {
                iterations += 1;
                if steepest {
                    break;
                }
                force_restart = true;
            }
            Err(e) => {
                let at = match &e {
                    Error::NonFiniteValue { point } => point.clone(),
                    _ => x.clone(),
                };
                return Err(failed(&at, e.to_string()));
            }
        }
    }

    let (f_star, x_star) = match obj.window_best() {
        Some((v, p)) => (v, p.to_vec()),
        None => (f, x),
    };
    Ok(LocalSearchResult {
        x_star,
        f_star,
        iterations,
        converged,
        evals_spent: obj.counter().since(&start_counter),
    })
}
