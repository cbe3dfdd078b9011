//! Analytic benchmark functions with gradients.

use std::f64::consts::{E, PI};

use crate::objective::Objective;

/// `1 + sin²(x₁) + sin²(x₂) − 0.1·exp(−x₁² − x₂²)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Price;

impl Objective for Price {
    fn dimension(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        1.0 + x[0].sin().powi(2) + x[1].sin().powi(2) - 0.1 * (-x[0] * x[0] - x[1] * x[1]).exp()
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let e = (-x[0] * x[0] - x[1] * x[1]).exp();
        Some(vec![
            (2.0 * x[0]).sin() + 0.2 * x[0] * e,
            (2.0 * x[1]).sin() + 0.2 * x[1] * e,
        ])
    }
}

/// Branin-Hoo:
/// `(x₂ − 1.275x₁²/π² + 5x₁/π − 6)² + (10 − 5/(4π))cos(x₁) + 10`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Branin;

impl Branin {
    const B: f64 = 1.275 / (PI * PI);
    const C: f64 = 5.0 / PI;
    const S: f64 = 10.0 - 5.0 / (4.0 * PI);

    fn inner(x: &[f64]) -> f64 {
        x[1] - Self::B * x[0] * x[0] + Self::C * x[0] - 6.0
    }
}

impl Objective for Branin {
    fn dimension(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        Self::inner(x).powi(2) + Self::S * x[0].cos() + 10.0
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let t = Self::inner(x);
        Some(vec![
            2.0 * t * (-2.0 * Self::B * x[0] + Self::C) - Self::S * x[0].sin(),
            2.0 * t,
        ])
    }
}

/// `−0.1 Σ cos(5πxᵢ) − Σ xᵢ²`, exactly as printed in the benchmark table.
#[derive(Debug, Clone, Copy)]
pub struct CosineMixture {
    pub dimension: usize,
}

impl Objective for CosineMixture {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .map(|v| -0.1 * (5.0 * PI * v).cos() - v * v)
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(
            x.iter()
                .map(|v| 0.5 * PI * (5.0 * PI * v).sin() - 2.0 * v)
                .collect(),
        )
    }
}

/// `Σ (xᵢ − 1)² − Σ_{i≥2} xᵢ xᵢ₋₁`.
#[derive(Debug, Clone, Copy)]
pub struct Trid {
    pub dimension: usize,
}

impl Trid {
    /// Closed-form minimizer `xᵢ = i(n + 1 − i)`.
    pub fn minimizer(&self) -> Vec<f64> {
        let n = self.dimension as f64;
        (1..=self.dimension).map(|i| i as f64 * (n + 1.0 - i as f64)).collect()
    }

    /// Closed-form minimum `−n(n + 4)(n − 1)/6`.
    pub fn minimum(&self) -> f64 {
        let n = self.dimension as f64;
        -n * (n + 4.0) * (n - 1.0) / 6.0
    }
}

impl Objective for Trid {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, x: &[f64]) -> f64 {
        let squares: f64 = x.iter().map(|v| (v - 1.0).powi(2)).sum();
        let cross: f64 = x.windows(2).map(|w| w[0] * w[1]).sum();
        squares - cross
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let n = x.len();
        Some(
            (0..n)
                .map(|i| {
                    let mut g = 2.0 * (x[i] - 1.0);
                    if i > 0 {
                        g -= x[i - 1];
                    }
                    if i + 1 < n {
                        g -= x[i + 1];
                    }
                    g
                })
                .collect(),
        )
    }
}

/// Six-dimensional Hartmann function.
#[derive(Debug, Clone, Copy, Default)]
pub struct Hartmann6;

impl Hartmann6 {
    pub const A: [[f64; 6]; 4] = [
        [10.0, 3.0, 17.0, 3.50, 1.70, 8.0],
        [0.05, 10.0, 17.0, 0.10, 8.00, 14.0],
        [3.0, 3.50, 1.70, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.10, 14.0],
    ];
    pub const C: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
    pub const P: [[f64; 6]; 4] = [
        [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
        [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
        [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
        [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
    ];

    fn terms(x: &[f64]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            let s: f64 = (0..6)
                .map(|j| Self::A[i][j] * (x[j] - Self::P[i][j]).powi(2))
                .sum();
            *o = Self::C[i] * (-s).exp();
        }
        out
    }
}

impl Objective for Hartmann6 {
    fn dimension(&self) -> usize {
        6
    }

    fn value(&self, x: &[f64]) -> f64 {
        -Self::terms(x).iter().sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let t = Self::terms(x);
        Some(
            (0..6)
                .map(|j| {
                    (0..4)
                        .map(|i| 2.0 * t[i] * Self::A[i][j] * (x[j] - Self::P[i][j]))
                        .sum()
                })
                .collect(),
        )
    }
}

/// `−20 exp(−0.2 √(Σxᵢ²/n)) − exp(Σcos(2πxᵢ)/n) + 20 + e`.
///
/// The first term has a cone point at the origin; the gradient reported
/// there is zero.
#[derive(Debug, Clone, Copy)]
pub struct Ackley {
    pub dimension: usize,
}

impl Objective for Ackley {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let r = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        let c = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
        -20.0 * (-0.2 * r).exp() - c.exp() + 20.0 + E
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let n = x.len() as f64;
        let r = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        let c = (x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n).exp();
        let cone = if r > 0.0 { 4.0 * (-0.2 * r).exp() / (n * r) } else { 0.0 };
        Some(
            x.iter()
                .map(|v| cone * v + 2.0 * PI / n * (2.0 * PI * v).sin() * c)
                .collect(),
        )
    }
}
