//! Acquisition functions for minimization and their inner maximizer.
//!
//! All scores are "larger is better". The incumbent is the smallest value
//! observed so far.

use libm::erfc;

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::rng::{sample_uniform, SeededRng};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `E[max(incumbent − Y, 0)]` for `Y ~ N(mean, sd²)`.
pub fn expected_improvement(mean: f64, sd: f64, incumbent: f64) -> f64 {
    let gap = incumbent - mean;
    if sd <= 0.0 {
        return gap.max(0.0);
    }
    let z = gap / sd;
    (gap * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

/// `P(Y < incumbent − xi)` for `Y ~ N(mean, sd²)`.
pub fn probability_of_improvement(mean: f64, sd: f64, incumbent: f64, xi: f64) -> f64 {
    let gap = incumbent - xi - mean;
    if sd <= 0.0 {
        return if gap > 0.0 { 1.0 } else { 0.0 };
    }
    normal_cdf(gap / sd)
}

/// Lower confidence bound `mean − κ·sd`, negated so that larger is better.
pub fn confidence_bound_score(mean: f64, sd: f64, kappa: f64) -> f64 {
    -(mean - kappa * sd)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AcquisitionKind {
    ExpectedImprovement,
    ProbabilityOfImprovement,
    ConfidenceBound,
}

impl AcquisitionKind {
    pub fn name(&self) -> &'static str {
        match self {
            AcquisitionKind::ExpectedImprovement => "ei",
            AcquisitionKind::ProbabilityOfImprovement => "pi",
            AcquisitionKind::ConfidenceBound => "lcb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ei" | "expected-improvement" => Some(AcquisitionKind::ExpectedImprovement),
            "pi" | "probability-of-improvement" => Some(AcquisitionKind::ProbabilityOfImprovement),
            "lcb" | "ucb" | "cb" | "confidence-bound" => Some(AcquisitionKind::ConfidenceBound),
            _ => None,
        }
    }
}

/// A concrete acquisition function for one BO iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    /// PI margin `ξ ≥ 0` or confidence multiplier `κ > 0`; unused by EI.
    pub exploration: f64,
    pub incumbent: f64,
}

impl AcquisitionSpec {
    /// Builds the spec for the observed `values`. Without an explicit
    /// `exploration`, PI uses `ξ = 0.01 × (max − min)` and the confidence
    /// bound uses `κ = 2`.
    pub fn for_values(kind: AcquisitionKind, exploration: Option<f64>, values: &[f64]) -> Result<Self> {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            return Err(Error::InvalidArgument("acquisition needs at least one finite value".into()));
        }
        let exploration = exploration.unwrap_or(match kind {
            AcquisitionKind::ExpectedImprovement => 0.0,
            AcquisitionKind::ProbabilityOfImprovement => 0.01 * (hi - lo).abs(),
            AcquisitionKind::ConfidenceBound => 2.0,
        });
        let spec = AcquisitionSpec {
            kind,
            exploration,
            incumbent: lo,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.incumbent.is_finite()
            && match self.kind {
                AcquisitionKind::ExpectedImprovement => true,
                AcquisitionKind::ProbabilityOfImprovement => self.exploration >= 0.0,
                AcquisitionKind::ConfidenceBound => self.exploration > 0.0,
            };
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid acquisition {self:?}")));
        }
        Ok(())
    }

    pub fn score(&self, mean: f64, variance: f64) -> f64 {
        let sd = variance.max(0.0).sqrt();
        match self.kind {
            AcquisitionKind::ExpectedImprovement => expected_improvement(mean, sd, self.incumbent),
            AcquisitionKind::ProbabilityOfImprovement => {
                probability_of_improvement(mean, sd, self.incumbent, self.exploration)
            }
            AcquisitionKind::ConfidenceBound => confidence_bound_score(mean, sd, self.exploration),
        }
    }

    /// Score of the model's posterior at `x`.
    pub fn evaluate(&self, model: &GpModel, x: &[f64]) -> f64 {
        let (mean, var) = model.posterior_unchecked(x);
        self.score(mean, var)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximizerConfig {
    /// Uniform candidates; `None` means `min(2048, 256·n)`.
    pub candidates: Option<usize>,
    pub refinement_starts: usize,
    /// Poll sweeps of the pattern search per refinement start.
    pub refinement_steps: usize,
}

impl Default for MaximizerConfig {
    fn default() -> Self {
        MaximizerConfig {
            candidates: None,
            refinement_starts: 5,
            refinement_steps: 50,
        }
    }
}

impl MaximizerConfig {
    pub fn candidate_count(&self, dimension: usize) -> usize {
        self.candidates.unwrap_or_else(|| (256 * dimension).min(2048)).max(1)
    }
}

/// The next point to query.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub point: Vec<f64>,
    pub score: f64,
    /// Every candidate scored the same, so the point was drawn uniformly.
    pub plateau: bool,
}

/// Maximizes `spec` over `domain` under `model`.
///
/// Scores a uniform candidate set, then polishes the best few candidates
/// with a box-respecting compass search. Ties between candidates go to the
/// earliest drawn. If all candidates score identically the acquisition
/// carries no information and a uniform random point is returned instead.
/// Nothing here touches the objective.
pub fn maximize_acquisition(
    model: &GpModel,
    spec: &AcquisitionSpec,
    domain: &BoxDomain,
    config: &MaximizerConfig,
    rng: &mut SeededRng,
) -> Result<Proposal> {
    if model.dimension() != domain.dimension() {
        return Err(Error::DimensionMismatch {
            expected: domain.dimension(),
            got: model.dimension(),
        });
    }
    spec.validate()?;
    let count = config.candidate_count(domain.dimension());
    let candidates = sample_uniform(domain, count, rng);
    let scores: Vec<f64> = candidates.iter().map(|c| spec.evaluate(model, c)).collect();

    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        let point = rng.point_in(domain);
        let score = spec.evaluate(model, &point);
        return Ok(Proposal {
            point,
            score,
            plateau: true,
        });
    }

    let mut order: Vec<usize> = (0..count).collect();
    // Stable sort keeps draw order among equal scores.
    order.sort_by(|a, b| scores[*b].partial_cmp(&scores[*a]).unwrap_or(std::cmp::Ordering::Equal));

    let mut best_point = candidates[order[0]].clone();
    let mut best_score = scores[order[0]];
    for &idx in order.iter().take(config.refinement_starts) {
        let (point, score) = refine(model, spec, domain, &candidates[idx], scores[idx], config.refinement_steps);
        if score > best_score {
            best_point = point;
            best_score = score;
        }
    }
    Ok(Proposal {
        point: best_point,
        score: best_score,
        plateau: false,
    })
}

fn refine(
    model: &GpModel,
    spec: &AcquisitionSpec,
    domain: &BoxDomain,
    start: &[f64],
    start_score: f64,
    sweeps: usize,
) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut score = start_score;
    let mut step = 0.05;
    for _ in 0..sweeps {
        let mut improved = false;
        for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[i] = (x[i] + sign * step * domain.width(i))
                    .clamp(domain.lower()[i], domain.upper()[i]);
                if cand[i] == x[i] {
                    continue;
                }
                let s = spec.evaluate(model, &cand);
                if s > score {
                    x = cand;
                    score = s;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-6 {
                break;
            }
        }
    }
    (x, score)
}
