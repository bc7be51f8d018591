//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfne_core::boost::Stump;
use rfne_core::Matrix;

/// First-occurrence ids by literal construction: build the list of distinct
/// values in order of appearance, then look each value up by linear scan.
pub fn unique_ids_quadratic(values: &[String]) -> Vec<usize> {
    let mut distinct: Vec<&String> = Vec::new();
    for v in values {
        if !distinct.contains(&v) {
            distinct.push(v);
        }
    }
    values
        .iter()
        .map(|v| distinct.iter().position(|d| *d == v).unwrap())
        .collect()
}

/// Average rank by counting: `#{j: v_j < v_i} + (#{j: v_j == v_i} + 1) / 2`.
pub fn ranks_by_counting(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Spearman's rho for tie-free data via `1 - 6 sum d^2 / (n (n^2 - 1))`.
pub fn spearman_no_ties(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks_by_counting(a), ranks_by_counting(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y) * (x - y)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Lowest weighted error over every stump: each feature, each observed
/// value (and negative infinity) as threshold, both polarities.
pub fn best_stump_error(x: &Matrix, z: &[i8], w: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for f in 0..x.cols() {
        let mut thresholds: Vec<f64> = (0..x.rows()).map(|i| x.get(i, f)).collect();
        thresholds.push(f64::NEG_INFINITY);
        for &t in &thresholds {
            for polarity in [1i8, -1] {
                let err: f64 = (0..x.rows())
                    .filter(|&i| {
                        let h = if x.get(i, f) > t { polarity } else { -polarity };
                        h != z[i]
                    })
                    .map(|i| w[i])
                    .sum();
                best = best.min(err);
            }
        }
    }
    best
}

pub fn stump_error(s: &Stump, x: &Matrix, z: &[i8], w: &[f64]) -> f64 {
    (0..x.rows())
        .filter(|&i| s.predict(x.row(i)) != z[i])
        .map(|i| w[i])
        .sum()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n x d` matrix of uniform values in `[-1, 1)`; rows are distinct with
/// probability one.
pub fn uniform_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    Matrix::from_rows((0..n).map(|_| {
        (0..d)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect::<Vec<f64>>()
    }))
    .unwrap()
}

pub fn train_mse(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter()
        .zip(y)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / y.len() as f64
}
