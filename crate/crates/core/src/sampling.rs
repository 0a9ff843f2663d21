//! Seeded sampling in Euclidean balls and on segments.
//!
//! A uniform point of `B(center, r)` is drawn as `n` standard normals
//! (normalized to a direction; redrawn if all are zero) followed by one
//! uniform `u`, giving radius `r * u^(1/n)`. Generators are ChaCha8 seeded
//! from a `u64`, so traces replay exactly given the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::vector::Vector;

pub type SolverRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform unit vector in `R^n`.
pub fn unit_direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let v = Vector::from(v);
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

/// Uniform point in the closed ball `B(center, radius)`.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, center: &[f64], radius: f64) -> Vector {
    let n = center.len();
    let dir = unit_direction(rng, n);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / n as f64);
    Vector::from(center).add_scaled(r, &dir)
}
