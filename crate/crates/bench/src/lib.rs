//! Fixtures for the criterion benches.

use mriclass::ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n × d` features in [0, 1) where label-1 rows are brighter in the first
/// quarter of the columns.
pub fn synthetic(n: usize, d: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let x = Array2::from_shape_fn((n, d), |(i, j)| {
        let lift = if y[i] == 1 && j < d / 4 { 0.3 } else { 0.0 };
        (rng.random_range(0.0..0.7f64) + lift).min(1.0)
    });
    (x, y)
}
