//! Seeded sample points for verification at a finite set of points.
//!
//! Every "field equals zero" claim in this crate is checked as
//! "residual ≤ tol at N seeded points". Points are drawn uniformly from an
//! axis-aligned box with a ChaCha generator so that reports are reproducible
//! across runs and platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_HALF_WIDTH: f64 = 2.0;

/// Axis-aligned box `[lo₀,hi₀] × … × [lo_{n-1},hi_{n-1}]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Region {
        assert_eq!(lo.len(), hi.len(), "region bounds differ in length");
        assert!(lo.iter().zip(&hi).all(|(a, b)| a < b), "empty region");
        Region { lo, hi }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Region {
        Region::new(vec![lo; dim], vec![hi; dim])
    }

    /// `[-2, 2]ⁿ`.
    pub fn default_box(dim: usize) -> Region {
        Region::cube(dim, -DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("only {found} of {wanted} sample points satisfied the domain constraints after {attempts} draws")]
pub struct SampleError {
    pub wanted: usize,
    pub found: usize,
    pub attempts: usize,
}

/// Deterministic point source: seed, count and box.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sampler {
    pub seed: u64,
    pub count: usize,
    pub region: Region,
}

impl Sampler {
    pub fn new(seed: u64, count: usize, region: Region) -> Sampler {
        Sampler { seed, count, region }
    }

    /// Default seed and count on `[-2,2]ⁿ`.
    pub fn default_for(dim: usize) -> Sampler {
        Sampler::new(DEFAULT_SEED, DEFAULT_SAMPLES, Region::default_box(dim))
    }

    pub fn with_count(mut self, count: usize) -> Sampler {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Sampler {
        self.seed = seed;
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// `count` uniform points, no rejection.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut rng = self.rng();
        (0..self.count).map(|_| self.draw(&mut rng)).collect()
    }

    /// `count` uniform points satisfying `accept`, drawn by rejection. Gives up
    /// after `50 * count` draws.
    pub fn points_where(&self, accept: impl Fn(&[f64]) -> bool) -> Result<Vec<Vec<f64>>, SampleError> {
        let mut rng = self.rng();
        let limit = 50 * self.count.max(1);
        let mut out = Vec::with_capacity(self.count);
        let mut attempts = 0;
        while out.len() < self.count {
            if attempts == limit {
                return Err(SampleError {
                    wanted: self.count,
                    found: out.len(),
                    attempts,
                });
            }
            attempts += 1;
            let p = self.draw(&mut rng);
            if accept(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.region
            .lo
            .iter()
            .zip(&self.region.hi)
            .map(|(a, b)| rng.gen_range(*a..*b))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_points() {
        let s = Sampler::default_for(3);
        assert_eq!(s.points(), s.points());
        assert_ne!(s.points(), s.clone().with_seed(7).points());
        assert!(s.points().iter().all(|p| s.region.contains(p)));
    }

    #[test]
    fn rejection_respects_predicate_and_gives_up() {
        let s = Sampler::default_for(2).with_count(20);
        let pts = s.points_where(|p| p[0] > 0.0).unwrap();
        assert_eq!(pts.len(), 20);
        assert!(pts.iter().all(|p| p[0] > 0.0));
        let err = s.points_where(|_| false).unwrap_err();
        assert_eq!(err.found, 0);
    }
}
