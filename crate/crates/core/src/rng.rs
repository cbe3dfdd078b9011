//! Seeded, platform-independent randomness.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::BoxDomain;

/// A ChaCha8 stream keyed by a 64-bit seed. Identical seeds give identical
/// draws on every platform.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A draw from `U[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// A uniform point inside `domain`.
    pub fn point_in(&mut self, domain: &BoxDomain) -> Vec<f64> {
        domain
            .lower()
            .iter()
            .zip(domain.upper())
            .map(|(lo, hi)| self.uniform(*lo, *hi))
            .collect()
    }

    /// A draw from `N(0, 1)` (Box-Muller).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// `count` points with i.i.d. uniform coordinates in `domain`.
pub fn sample_uniform(domain: &BoxDomain, count: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    (0..count).map(|_| rng.point_in(domain)).collect()
}

/// A Latin hypercube design of `count` points over the given per-axis bounds.
/// Each axis is cut into `count` equal strata and every stratum holds exactly
/// one point.
pub fn latin_hypercube(bounds: &[(f64, f64)], count: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    use rand::seq::SliceRandom;

    let mut points = vec![vec![0.0; bounds.len()]; count];
    for (axis, (lo, hi)) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..count).collect();
        strata.shuffle(rng);
        for (point, stratum) in points.iter_mut().zip(strata) {
            let t = (stratum as f64 + rng.unit()) / count as f64;
            point[axis] = lo + (hi - lo) * t;
        }
    }
    points
}
