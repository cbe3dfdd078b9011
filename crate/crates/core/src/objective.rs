//! Objectives and evaluation accounting.
//!
//! Cost is measured the way the benchmark literature on multi-start methods
//! does: one unit per objective value and one unit per gradient, regardless
//! of dimension. The counters live in [`CountedObjective`], so every
//! optimizer pays through the same wrapper and none of them can report a
//! different number than what was actually spent.

use std::sync::Arc;

use crate::error::{Error, Result};

/// A deterministic scalar function on `R^n`, optionally with its gradient.
///
/// Oracles accept any point of `R^n`; box membership is the caller's business.
pub trait Objective {
    fn dimension(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Analytic gradient, or `None` when the objective has no gradient oracle.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(x)
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(x)
    }
}

impl<T: Objective + ?Sized> Objective for Arc<T> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(x)
    }
}

/// Value and gradient call counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounter {
    pub n_f: u64,
    pub n_g: u64,
}

impl EvalCounter {
    /// `n_f + n_g`, the combined-evaluation cost.
    pub fn combined(&self) -> u64 {
        self.n_f + self.n_g
    }

    /// Calls spent since `earlier`.
    pub fn since(&self, earlier: &EvalCounter) -> EvalCounter {
        EvalCounter {
            n_f: self.n_f - earlier.n_f,
            n_g: self.n_g - earlier.n_g,
        }
    }
}

/// Free-function form of [`EvalCounter::combined`].
pub fn combined_evals(counter: &EvalCounter) -> u64 {
    counter.combined()
}

/// Wraps an [`Objective`] and counts every call made through it.
///
/// Also remembers the lowest value observed since the last
/// [`reset_window`](Self::reset_window), which lets a local search report
/// the best point it ever touched.
#[derive(Debug)]
pub struct CountedObjective<O> {
    inner: O,
    counter: EvalCounter,
    window_best: Option<(f64, Vec<f64>)>,
}

impl<O: Objective> CountedObjective<O> {
    pub fn new(inner: O) -> Self {
        CountedObjective {
            inner,
            counter: EvalCounter::default(),
            window_best: None,
        }
    }

    pub fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    pub fn counter(&self) -> EvalCounter {
        self.counter
    }

    pub fn combined_evals(&self) -> u64 {
        self.counter.combined()
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn into_inner(self) -> O {
        self.inner
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.inner.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.inner.dimension(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `f(x)`. Counts one value evaluation, including when the value is not finite.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        self.counter.n_f += 1;
        let v = self.inner.value(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteValue { point: x.to_vec() });
        }
        match &self.window_best {
            Some((best, _)) if *best <= v => {}
            _ => self.window_best = Some((v, x.to_vec())),
        }
        Ok(v)
    }

    /// `∇f(x)` from the analytic oracle. Counts one gradient evaluation.
    pub fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let g = self.inner.gradient(x).ok_or(Error::NoGradient)?;
        self.counter.n_g += 1;
        if g.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: g.len(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { point: x.to_vec() });
        }
        Ok(g)
    }

    /// Analytic gradient when available, otherwise central differences that
    /// cost `2n` value evaluations.
    pub fn gradient_or_fd(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        match self.gradient(x) {
            Err(Error::NoGradient) => {
                let mut probe = x.to_vec();
                let mut g = vec![0.0; x.len()];
                for i in 0..x.len() {
                    let h = 1e-6 * (1.0 + x[i].abs());
                    probe[i] = x[i] + h;
                    let up = self.evaluate(&probe)?;
                    probe[i] = x[i] - h;
                    let down = self.evaluate(&probe)?;
                    probe[i] = x[i];
                    g[i] = (up - down) / (2.0 * h);
                }
                Ok(g)
            }
            other => other,
        }
    }

    /// Forgets the best value observed so far.
    pub fn reset_window(&mut self) {
        self.window_best = None;
    }

    /// The lowest value, and its point, observed since the last reset.
    pub fn window_best(&self) -> Option<(f64, &[f64])> {
        self.window_best.as_ref().map(|(v, x)| (*v, x.as_slice()))
    }
}

/// An objective built from closures. Handy for tests and ad hoc problems.
pub struct FnObjective<F, G> {
    dimension: usize,
    value: F,
    gradient: Option<G>,
}

impl<F> FnObjective<F, fn(&[f64]) -> Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    /// A value-only objective.
    pub fn value_only(dimension: usize, value: F) -> Self {
        FnObjective {
            dimension,
            value,
            gradient: None,
        }
    }
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(dimension: usize, value: F, gradient: G) -> Self {
        FnObjective {
            dimension,
            value,
            gradient: Some(gradient),
        }
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }
}

impl<F, G> std::fmt::Debug for FnObjective<F, G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnObjective")
            .field("dimension", &self.dimension)
            .field("has_gradient", &self.gradient.is_some())
            .finish()
    }
}
