//! Shared inputs for the benchmarks.

use rand::Rng;
use riskalign::Matrix;

/// Seeded uniform matrix with a noisy linear label.
pub fn labeled_problem(n: usize, m: usize, positive_rate: f64, seed: u64) -> (Matrix, Vec<u8>) {
    let mut rng = riskalign::rng::seeded(seed);
    let data: Vec<f64> = (0..n * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = Matrix::new(n, m, data).expect("shape matches");
    let y = (0..n)
        .map(|i| {
            let row = x.row(i);
            let score = row[0] + 0.5 * row[1 % m] + 0.3 * rng.random_range(-1.0..1.0);
            u8::from(score > 1.5 - 3.0 * positive_rate)
        })
        .collect();
    (x, y)
}

/// A dataset with a fixed number of minority rows, for SMOTE.
pub fn imbalanced(n_majority: usize, n_minority: usize, m: usize, seed: u64) -> (Matrix, Vec<u8>) {
    let mut rng = riskalign::rng::seeded(seed);
    let n = n_majority + n_minority;
    let data: Vec<f64> = (0..n * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y = (0..n).map(|i| u8::from(i >= n_majority)).collect();
    (Matrix::new(n, m, data).expect("shape matches"), y)
}
