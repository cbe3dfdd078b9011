//! Gaussian-process regression with a squared-exponential ARD kernel.
//!
//! Given data `D = {(x_j, y_j)}`, a constant prior mean `μ` and Gram matrix
//! `K = k(X, X) + σ_n² I`, the posterior at `x` is
//!
//! ```text
//! mean(x)     = μ + k(x, X) K⁻¹ (y − μ)
//! variance(x) = k(x, x) − k(x, X) K⁻¹ k(X, x)
//! ```
//!
//! Both are computed from a cached Cholesky factor of `K` (plus a small
//! diagonal jitter). Hyperparameters are chosen by maximizing the log
//! marginal likelihood with a multi-start compass search in log space.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::rng::{latin_hypercube, SeededRng};

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const JITTER_ESCALATIONS: usize = 3;

/// Query points and observed values, `D_n = {(x_i, y_i)}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalDataset {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl EvalDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: values.len(),
            });
        }
        let mut data = EvalDataset::new();
        for (x, y) in points.into_iter().zip(values) {
            data.push(x, y)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if let Some(first) = self.points.first() {
            if first.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: x.len(),
                });
            }
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { point: x });
        }
        self.points.push(x);
        self.values.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dimension(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    /// Index and value of the smallest observation (first on ties).
    pub fn best(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
                Some((_, b)) if b <= *v => acc,
                _ => Some((i, *v)),
            })
    }

    /// Copy with exact duplicate points removed, keeping the first occurrence.
    pub fn deduplicated(&self) -> EvalDataset {
        let mut out = EvalDataset::new();
        for (x, y) in self.points.iter().zip(&self.values) {
            if !out.points.iter().any(|p| p == x) {
                out.points.push(x.clone());
                out.values.push(*y);
            }
        }
        out
    }
}

/// Squared-exponential ARD hyperparameters and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub signal_variance: f64,
    pub length_scales: Vec<f64>,
    /// Observation-noise variance `σ_n²`.
    pub noise_variance: f64,
    /// Diagonal inflation used when factorizing.
    pub jitter: f64,
}

impl KernelConfig {
    /// Default jitter is `1e-10 × signal_variance`.
    pub fn new(signal_variance: f64, length_scales: Vec<f64>, noise_variance: f64) -> Self {
        KernelConfig {
            signal_variance,
            length_scales,
            noise_variance,
            jitter: 1e-10 * signal_variance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.signal_variance)
            || !positive(self.jitter)
            || self.length_scales.is_empty()
            || !self.length_scales.iter().all(|l| positive(*l))
            || !(self.noise_variance >= 0.0 && self.noise_variance.is_finite())
        {
            return Err(Error::InvalidArgument(format!("invalid kernel {self:?}")));
        }
        Ok(())
    }

    /// `k(a, b) = s² exp(−½ Σ ((a_i − b_i) / ℓ_i)²)`.
    pub fn covariance(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a
            .iter()
            .zip(b)
            .zip(&self.length_scales)
            .map(|((x, y), l)| {
                let d = (x - y) / l;
                d * d
            })
            .sum();
        self.signal_variance * (-0.5 * r2).exp()
    }
}

/// `k(X, X)` without noise or jitter.
pub fn gram_matrix(points: &[Vec<f64>], kernel: &KernelConfig) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.covariance(&points[i], &points[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Factors `k(X,X) + (σ_n² + jitter) I`, multiplying the jitter by ten up to
/// three times if the matrix is not numerically positive definite.
fn factorize(points: &[Vec<f64>], kernel: &KernelConfig) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let base = gram_matrix(points, kernel);
    let mut jitter = kernel.jitter;
    for _ in 0..=JITTER_ESCALATIONS {
        let mut k = base.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += kernel.noise_variance + jitter;
        }
        if let Some(chol) = Cholesky::new(k) {
            return Ok((chol, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::ModelFit(format!(
        "gram matrix of {} points is not positive definite even with jitter {jitter:e}",
        points.len()
    )))
}

fn lml_from_factor(chol: &Cholesky<f64, Dyn>, residual: &DVector<f64>) -> f64 {
    let alpha = chol.solve(residual);
    let n = residual.len() as f64;
    let half_logdet: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    -0.5 * residual.dot(&alpha) - half_logdet - 0.5 * n * LN_2PI
}

/// `−½ (y−μ)ᵀ K⁻¹ (y−μ) − ½ log det K − (n/2) log 2π` with
/// `K = k(X,X) + σ_n² I` (plus jitter).
pub fn log_marginal_likelihood(
    data: &EvalDataset,
    kernel: &KernelConfig,
    prior_mean: f64,
) -> Result<f64> {
    kernel.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let (chol, _) = factorize(data.points(), kernel)?;
    let residual = DVector::from_iterator(data.len(), data.values().iter().map(|y| y - prior_mean));
    Ok(lml_from_factor(&chol, &residual))
}

/// Log marginal likelihood evaluator for one dataset, reused across the many
/// hyperparameter settings tried during fitting. Squared coordinate
/// differences are computed once and the factorization works in place.
struct LikelihoodCache {
    n: usize,
    dim: usize,
    /// `(x_i[d] − x_j[d])²` for `j < i`, laid out per pair then per dimension.
    sq_diffs: Vec<f64>,
    residual: Vec<f64>,
    buffer: Vec<f64>,
}

impl LikelihoodCache {
    fn new(points: &[Vec<f64>], residual: Vec<f64>) -> Self {
        let n = points.len();
        let dim = points.first().map_or(0, |p| p.len());
        let mut sq_diffs = Vec::with_capacity(n * n.saturating_sub(1) / 2 * dim);
        for i in 0..n {
            for j in 0..i {
                for d in 0..dim {
                    let t = points[i][d] - points[j][d];
                    sq_diffs.push(t * t);
                }
            }
        }
        LikelihoodCache {
            n,
            dim,
            sq_diffs,
            residual,
            buffer: vec![0.0; n * n],
        }
    }

    fn evaluate(&mut self, kernel: &KernelConfig) -> f64 {
        let inv: Vec<f64> = kernel.length_scales.iter().map(|l| -0.5 / (l * l)).collect();
        let mut jitter = kernel.jitter;
        for _ in 0..=JITTER_ESCALATIONS {
            self.fill(kernel, &inv, kernel.noise_variance + jitter);
            if let Some(value) = self.factor_and_score() {
                return value;
            }
            jitter *= 10.0;
        }
        f64::NEG_INFINITY
    }

    fn fill(&mut self, kernel: &KernelConfig, inv: &[f64], diagonal: f64) {
        let n = self.n;
        let mut pair = 0;
        for i in 0..n {
            for j in 0..i {
                let diffs = &self.sq_diffs[pair * self.dim..(pair + 1) * self.dim];
                let r: f64 = diffs.iter().zip(inv).map(|(d, w)| d * w).sum();
                self.buffer[i * n + j] = kernel.signal_variance * r.exp();
                pair += 1;
            }
            self.buffer[i * n + i] = kernel.signal_variance + diagonal;
        }
    }

    /// Row-major Cholesky of the lower triangle in `buffer`, then
    /// `−½‖L⁻¹r‖² − Σ log L_ii − (n/2) log 2π`. `None` if not positive definite.
    fn factor_and_score(&mut self) -> Option<f64> {
        let n = self.n;
        let a = &mut self.buffer;
        for i in 0..n {
            let (done, rest) = a.split_at_mut(i * n);
            let row_i = &mut rest[..n];
            for j in 0..i {
                let row_j = &done[j * n..j * n + j];
                row_i[j] = (row_i[j] - dot(&row_i[..j], row_j)) / done[j * n + j];
            }
            let v = row_i[i] - dot(&row_i[..i], &row_i[..i]);
            if !(v > 0.0) {
                return None;
            }
            row_i[i] = v.sqrt();
        }
        let mut z = vec![0.0; n];
        let mut quad = 0.0;
        let mut half_logdet = 0.0;
        for i in 0..n {
            let row = &a[i * n..i * n + i + 1];
            z[i] = (self.residual[i] - dot(&row[..i], &z[..i])) / row[i];
            quad += z[i] * z[i];
            half_logdet += row[i].ln();
        }
        Some(-0.5 * quad - half_logdet - 0.5 * n as f64 * LN_2PI)
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Settings for hyperparameter fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct GpFitConfig {
    /// Latin-hypercube starts for the likelihood search. May be zero when a
    /// warm start is given.
    pub starts: usize,
    /// Likelihood evaluations allowed per start.
    pub max_steps: usize,
    /// `σ_n² = noise_ratio × max(var(y), 1e-12)`.
    pub noise_ratio: f64,
    /// Search box half-width in log10 units around the domain width (length
    /// scales) and the sample variance of `y` (signal variance).
    pub log10_span: f64,
    /// Extra start, typically the previous fit's hyperparameters.
    pub warm_start: Option<KernelConfig>,
    /// Observations whose spread is at most `flat_tolerance × (1 + max|y|)`
    /// are treated as identical and give a constant model. Local minima
    /// reported by an iterative solver differ in their last digits even when
    /// they are the same minimum.
    pub flat_tolerance: f64,
    /// Also fit `σ_n²` by likelihood, between the floor above and `var(y)`.
    pub fit_noise: bool,
}

impl Default for GpFitConfig {
    fn default() -> Self {
        GpFitConfig {
            starts: 8,
            max_steps: 100,
            noise_ratio: 1e-6,
            log10_span: 3.0,
            warm_start: None,
            flat_tolerance: 1e-8,
            fit_noise: false,
        }
    }
}

/// A fitted Gaussian process.
#[derive(Debug, Clone)]
pub struct GpModel {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    kernel: KernelConfig,
    prior_mean: f64,
    factor: Option<Cholesky<f64, Dyn>>,
    weights: DVector<f64>,
    jitter_used: f64,
}

impl GpModel {
    /// Conditions a GP with fixed hyperparameters on `data`. Later duplicates
    /// of a point are dropped.
    pub fn with_hyperparameters(
        data: &EvalDataset,
        kernel: KernelConfig,
        prior_mean: f64,
    ) -> Result<GpModel> {
        kernel.validate()?;
        if data.is_empty() {
            return Err(Error::InvalidArgument("cannot condition on an empty dataset".into()));
        }
        if data.dimension() != Some(kernel.length_scales.len()) {
            return Err(Error::DimensionMismatch {
                expected: kernel.length_scales.len(),
                got: data.dimension().unwrap_or(0),
            });
        }
        let data = data.deduplicated();
        let (chol, jitter_used) = factorize(data.points(), &kernel)?;
        let residual = DVector::from_iterator(data.len(), data.values().iter().map(|y| y - prior_mean));
        let weights = chol.solve(&residual);
        Ok(GpModel {
            points: data.points,
            values: data.values,
            kernel,
            prior_mean,
            factor: Some(chol),
            weights,
            jitter_used,
        })
    }

    /// The model used when every observation is identical: the posterior
    /// mean is that value everywhere and the variance is the signal floor.
    fn constant(data: &EvalDataset, value: f64, signal_floor: f64) -> GpModel {
        let dim = data.dimension().unwrap_or(1);
        GpModel {
            points: data.points().to_vec(),
            values: data.values().to_vec(),
            kernel: KernelConfig::new(signal_floor, vec![1.0; dim], 0.0),
            prior_mean: value,
            factor: None,
            weights: DVector::zeros(0),
            jitter_used: 0.0,
        }
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.kernel
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    pub fn dimension(&self) -> usize {
        self.kernel.length_scales.len()
    }

    /// Number of distinct training points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.factor.is_none()
    }

    /// Jitter actually added to the diagonal, after any escalation.
    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn training_values(&self) -> &[f64] {
        &self.values
    }

    /// Log marginal likelihood of the training data under this model.
    pub fn log_marginal_likelihood(&self) -> Option<f64> {
        let chol = self.factor.as_ref()?;
        let residual = DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|y| y - self.prior_mean),
        );
        Some(lml_from_factor(chol, &residual))
    }

    /// Posterior mean and variance at `x`; the variance is clamped at zero.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        Ok(self.posterior_unchecked(x))
    }

    pub(crate) fn posterior_unchecked(&self, x: &[f64]) -> (f64, f64) {
        let Some(chol) = &self.factor else {
            return (self.prior_mean, self.kernel.signal_variance);
        };
        let k_star = DVector::from_iterator(
            self.points.len(),
            self.points.iter().map(|p| self.kernel.covariance(x, p)),
        );
        let mean = self.prior_mean + k_star.dot(&self.weights);
        let v = chol
            .l_dirty()
            .solve_lower_triangular(&k_star)
            .expect("cholesky factor has a nonzero diagonal");
        let var = (self.kernel.signal_variance - v.norm_squared()).max(0.0);
        (mean, var)
    }
}

/// Free-function form of [`GpModel::posterior`].
pub fn gp_posterior(model: &GpModel, x: &[f64]) -> Result<(f64, f64)> {
    model.posterior(x)
}

fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return 0.0;
    }
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Fits hyperparameters to `data` and returns the conditioned model.
///
/// The prior mean is the sample mean of `y` and the noise variance is fixed
/// at `noise_ratio × var(y)`. The signal variance and one length scale per
/// dimension are chosen by maximizing the log marginal likelihood: each of
/// `starts` Latin-hypercube points (plus the optional warm start) seeds a
/// compass search in log space, bounded to `10^±log10_span` around `var(y)`
/// and the domain widths.
pub fn fit_gp(
    data: &EvalDataset,
    domain: &BoxDomain,
    config: &GpFitConfig,
    rng: &mut SeededRng,
) -> Result<GpModel> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("cannot fit a GP to an empty dataset".into()));
    }
    if data.dimension() != Some(domain.dimension()) {
        return Err(Error::DimensionMismatch {
            expected: domain.dimension(),
            got: data.dimension().unwrap_or(0),
        });
    }
    let data = data.deduplicated();
    let values = data.values();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = sample_variance(values).max(1e-12);
    let scale = 1.0 + lo.abs().max(hi.abs());
    if hi - lo <= config.flat_tolerance * scale || data.len() < 2 {
        return Ok(GpModel::constant(&data, mean, var * 1e-6));
    }
    let noise = config.noise_ratio * var;

    let span = config.log10_span * std::f64::consts::LN_10;
    let mut bounds = vec![(var.ln() - span, var.ln() + span)];
    for w in domain.widths() {
        bounds.push((w.ln() - span, w.ln() + span));
    }

    // theta = [log σ_f², log ℓ_1, …, log ℓ_n] (+ log σ_n² when fitted).
    let dim = domain.dimension();
    if config.fit_noise {
        bounds.push((noise.ln(), noise.ln().max(var.ln())));
    }
    let to_kernel = |theta: &[f64]| -> KernelConfig {
        KernelConfig::new(
            theta[0].exp(),
            theta[1..=dim].iter().map(|t| t.exp()).collect(),
            theta.get(dim + 1).map_or(noise, |t| t.exp()),
        )
    };
    let cache = std::cell::RefCell::new(LikelihoodCache::new(
        data.points(),
        values.iter().map(|y| y - mean).collect(),
    ));
    let objective = |theta: &[f64]| -> f64 { cache.borrow_mut().evaluate(&to_kernel(theta)) };

    // Without a warm start at least one random start is needed.
    let random_starts = if config.warm_start.is_some() { config.starts } else { config.starts.max(1) };
    let mut starts = latin_hypercube(&bounds, random_starts, rng);
    if let Some(warm) = &config.warm_start {
        if warm.length_scales.len() == domain.dimension() {
            let mut theta = vec![warm.signal_variance.ln()];
            theta.extend(warm.length_scales.iter().map(|l| l.ln()));
            if config.fit_noise {
                theta.push(warm.noise_variance.max(noise).ln());
            }
            for (t, (lo, hi)) in theta.iter_mut().zip(&bounds) {
                *t = t.clamp(*lo, *hi);
            }
            starts.insert(0, theta);
        }
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let (value, theta) = compass_ascent(&objective, start, &bounds, config.max_steps);
        if value.is_finite() && best.as_ref().map_or(true, |(b, _)| value > *b) {
            best = Some((value, theta));
        }
    }
    let (_, theta) = best.ok_or_else(|| {
        Error::ModelFit("log marginal likelihood is not finite at any start".into())
    })?;
    GpModel::with_hyperparameters(&data, to_kernel(&theta), mean)
}

/// Coordinate-wise pattern search maximizing `objective` inside `bounds`,
/// using at most `budget` evaluations.
fn compass_ascent(
    objective: &impl Fn(&[f64]) -> f64,
    mut theta: Vec<f64>,
    bounds: &[(f64, f64)],
    budget: usize,
) -> (f64, Vec<f64>) {
    let mut value = objective(&theta);
    let mut evals = 1;
    let mut step = 1.0;
    while evals < budget && step > 1e-3 {
        let mut improved = false;
        'coords: for i in 0..theta.len() {
            for sign in [1.0, -1.0] {
                if evals >= budget {
                    break 'coords;
                }
                let mut cand = theta.clone();
                cand[i] = (theta[i] + sign * step).clamp(bounds[i].0, bounds[i].1);
                if cand[i] == theta[i] {
                    continue;
                }
                let v = objective(&cand);
                evals += 1;
                if v > value {
                    theta = cand;
                    value = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (value, theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_kernel(noise: f64) -> KernelConfig {
        KernelConfig::new(1.0, vec![1.0], noise)
    }

    #[test]
    fn interpolates_two_points() {
        let data = EvalDataset::from_parts(vec![vec![0.0], vec![1.0]], vec![0.0, 1.0]).unwrap();
        let domain = BoxDomain::cube(1, 0.0, 2.0).unwrap();
        let model = fit_gp(&data, &domain, &GpFitConfig::default(), &mut SeededRng::new(0)).unwrap();
        let (mean, _) = model.posterior(&[0.0]).unwrap();
        assert!(mean.abs() <= 1e-6, "mean {mean}");
    }

    #[test]
    fn constant_data_gives_constant_model() {
        let data = EvalDataset::from_parts(
            vec![vec![0.0], vec![0.5], vec![1.5]],
            vec![5.0, 5.0, 5.0],
        )
        .unwrap();
        let domain = BoxDomain::cube(1, 0.0, 2.0).unwrap();
        let model = fit_gp(&data, &domain, &GpFitConfig::default(), &mut SeededRng::new(0)).unwrap();
        assert!(model.is_constant());
        for x in [0.0, 0.7, 2.0] {
            let (mean, var) = model.posterior(&[x]).unwrap();
            assert_eq!(mean, 5.0);
            assert!(var <= model.kernel().signal_variance);
        }
    }

    #[test]
    fn noiseless_posterior_at_training_point() {
        let data = EvalDataset::from_parts(vec![vec![0.0], vec![2.0]], vec![1.5, -0.5]).unwrap();
        let model = GpModel::with_hyperparameters(&data, unit_kernel(0.0), 0.0).unwrap();
        let (mean, var) = model.posterior(&[0.0]).unwrap();
        assert!((mean - 1.5).abs() < 1e-9);
        assert!(var <= 10.0 * model.kernel().jitter);
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let data = EvalDataset::from_parts(vec![vec![0.0], vec![1.0]], vec![1.0, -1.0]).unwrap();
        let model = GpModel::with_hyperparameters(&data, unit_kernel(0.0), 0.0).unwrap();
        let (mean, var) = model.posterior(&[25.0]).unwrap();
        assert!(mean.abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_point_likelihood() {
        let data = EvalDataset::from_parts(vec![vec![0.0]], vec![0.0]).unwrap();
        let mut k = KernelConfig::new(1.0, vec![1.0], 0.0);
        k.jitter = 1e-300;
        let lml = log_marginal_likelihood(&data, &k, 0.0).unwrap();
        assert!((lml + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        let data = EvalDataset::from_parts(vec![vec![0.0]], vec![2.0]).unwrap();
        let lml = log_marginal_likelihood(&data, &k, 0.0).unwrap();
        assert!((lml - (-2.0 - 0.5 * (2.0 * std::f64::consts::PI).ln())).abs() < 1e-12);
    }

    #[test]
    fn duplicates_are_dropped() {
        let data = EvalDataset::from_parts(
            vec![vec![0.0], vec![1.0], vec![0.0]],
            vec![0.0, 1.0, 3.0],
        )
        .unwrap();
        let model = GpModel::with_hyperparameters(&data, unit_kernel(0.0), 0.0).unwrap();
        assert_eq!(model.len(), 2);
        assert_eq!(model.training_values(), &[0.0, 1.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let data = EvalDataset::from_parts(vec![vec![0.0]], vec![0.0]).unwrap();
        let model = GpModel::with_hyperparameters(&data, unit_kernel(0.0), 0.0).unwrap();
        assert!(matches!(
            model.posterior(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut d = EvalDataset::new();
        d.push(vec![0.0], 1.0).unwrap();
        assert!(d.push(vec![0.0, 1.0], 1.0).is_err());
        assert!(d.push(vec![0.5], f64::NAN).is_err());
    }

    #[test]
    fn best_prefers_first_minimum() {
        let data = EvalDataset::from_parts(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![3.0, 1.0, 1.0],
        )
        .unwrap();
        assert_eq!(data.best(), Some((1, 1.0)));
    }

    fn scattered(n: usize, dim: usize, seed: u64) -> EvalDataset {
        let mut rng = SeededRng::new(seed);
        let domain = BoxDomain::cube(dim, -2.0, 2.0).unwrap();
        let points = crate::rng::sample_uniform(&domain, n, &mut rng);
        let values = points.iter().map(|p| p.iter().map(|v| (1.7 * v).sin()).sum()).collect();
        EvalDataset::from_parts(points, values).unwrap()
    }

    #[test]
    fn fitting_likelihood_matches_public_formula() {
        let data = scattered(30, 3, 4);
        let mean = data.values().iter().sum::<f64>() / 30.0;
        for kernel in [
            KernelConfig::new(1.3, vec![0.4, 1.0, 2.5], 1e-4),
            KernelConfig::new(0.2, vec![3.0, 3.0, 0.1], 0.05),
        ] {
            let expected = log_marginal_likelihood(&data, &kernel, mean).unwrap();
            let mut cache = LikelihoodCache::new(data.points(), data.values().iter().map(|y| y - mean).collect());
            let got = cache.evaluate(&kernel);
            assert!((got - expected).abs() <= 1e-9 * (1.0 + expected.abs()), "{got} vs {expected}");
        }
    }

    #[test]
    fn fitted_noise_stays_between_floor_and_variance() {
        let data = scattered(25, 2, 9);
        let domain = BoxDomain::cube(2, -2.0, 2.0).unwrap();
        let config = GpFitConfig {
            fit_noise: true,
            ..GpFitConfig::default()
        };
        let model = fit_gp(&data, &domain, &config, &mut SeededRng::new(1)).unwrap();
        let var = sample_variance(data.values());
        let noise = model.kernel().noise_variance;
        assert!(noise >= 1e-6 * var * (1.0 - 1e-12) && noise <= var * (1.0 + 1e-12), "{noise}");

        let fixed = fit_gp(&data, &domain, &GpFitConfig::default(), &mut SeededRng::new(1)).unwrap();
        assert_eq!(fixed.kernel().noise_variance, 1e-6 * var);
    }

    #[test]
    fn nearly_equal_values_count_as_flat() {
        let data = EvalDataset::from_parts(
            vec![vec![0.0], vec![0.5], vec![1.5]],
            vec![1.0, 1.0 + 1e-10, 1.0 - 2e-10],
        )
        .unwrap();
        let domain = BoxDomain::cube(1, 0.0, 2.0).unwrap();
        let model = fit_gp(&data, &domain, &GpFitConfig::default(), &mut SeededRng::new(0)).unwrap();
        assert!(model.is_constant());
        let strict = GpFitConfig {
            flat_tolerance: 0.0,
            ..GpFitConfig::default()
        };
        assert!(!fit_gp(&data, &domain, &strict, &mut SeededRng::new(0)).unwrap().is_constant());
    }

    #[test]
    fn warm_start_alone_is_enough() {
        let data = scattered(12, 2, 2);
        let domain = BoxDomain::cube(2, -2.0, 2.0).unwrap();
        let first = fit_gp(&data, &domain, &GpFitConfig::default(), &mut SeededRng::new(3)).unwrap();
        let config = GpFitConfig {
            starts: 0,
            warm_start: Some(first.kernel().clone()),
            ..GpFitConfig::default()
        };
        let again = fit_gp(&data, &domain, &config, &mut SeededRng::new(3)).unwrap();
        assert!(again.log_marginal_likelihood().unwrap() >= first.log_marginal_likelihood().unwrap() - 1e-9);
    }
}
