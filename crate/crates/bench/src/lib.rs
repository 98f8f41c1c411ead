//! Shared fixtures for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trimwind::{Model, Point3, Vec3};

/// `n` points uniform in the model's bounding box grown by `margin`.
pub fn box_points(model: &Model, n: usize, margin: f64, seed: u64) -> Vec<Point3> {
    let b = model.aabb().expanded(margin);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.gen_range(b.min.x..b.max.x),
                rng.gen_range(b.min.y..b.max.y),
                rng.gen_range(b.min.z..b.max.z),
            )
        })
        .collect()
}

/// `n` points at distance `offset` from the unit sphere, alternately
/// inside and outside.
pub fn shell_points(n: usize, offset: f64, seed: u64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let d = trimwind::kernel::random_unit(rng.gen());
            let r = if i % 2 == 0 {
                1.0 - offset
            } else {
                1.0 + offset
            };
            d * r
        })
        .collect()
}
