//! Seeded random streams.
//!
//! The stream is ChaCha20 (`rand_chacha::ChaCha20Rng::seed_from_u64`), a
//! counter-based generator whose output is fixed by its reference
//! definition. Conversions to floating point are done here rather than through
//! `rand`'s distributions so the sequence of drawn values stays stable:
//!
//! * uniform `[0, 1)`: the top 53 bits of one `u64` word times `2^-53`;
//! * standard normal: Box–Muller on two uniforms `u1, u2`, producing
//!   `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)` and then the matching `sin` value
//!   on the next call.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::Vector;

#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha20Rng,
    spare_normal: Option<f64>,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal_vector(&mut self, n: usize) -> Vector {
        Vector::from_fn(n, |_, _| self.standard_normal())
    }

    /// Uniform point in the Euclidean ball of the given center and radius.
    pub fn point_in_ball(&mut self, center: &Vector, radius: f64) -> Vector {
        let n = center.len();
        let dir = self.normal_vector(n);
        let norm = dir.norm();
        let r = radius * self.uniform().powf(1.0 / n as f64);
        if norm == 0.0 {
            return center.clone();
        }
        center + dir * (r / norm)
    }

    /// Uniform point in the box `[lower, upper]` (finite bounds only).
    pub fn point_in_box(&mut self, lower: &Vector, upper: &Vector) -> Vector {
        Vector::from_fn(lower.len(), |i, _| self.uniform_range(lower[i], upper[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Sampler::new(7);
        let mut b = Sampler::new(7);
        for _ in 0..100 {
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
        assert_ne!(Sampler::new(8).uniform(), Sampler::new(7).uniform());
    }

    #[test]
    fn normal_moments_are_plausible() {
        let mut s = Sampler::new(1);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut s = Sampler::new(3);
        let c = Vector::from_column_slice(&[1.0, -2.0, 0.5]);
        for _ in 0..1000 {
            assert!((s.point_in_ball(&c, 0.3) - &c).norm() <= 0.3 + 1e-15);
        }
    }
}
