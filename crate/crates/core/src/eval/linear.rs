//! Ridge-regularized least squares, the linear baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// One weight per feature column.
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_all(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.predict(r)).collect()
    }

    /// Weights followed by the intercept.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut c = self.weights.clone();
        c.push(self.intercept);
        c
    }
}

/// Minimizes `|Xw + b - y|^2 + ridge * |w|^2` (intercept unpenalized).
///
/// Columns are centered and scaled before forming the normal equations; the
/// penalty is carried through the scaling so the minimizer is unchanged.
pub fn fit_linear(x: &Matrix, y: &[f64], ridge: f64) -> Result<LinearModel> {
    let (n, d) = (x.rows(), x.cols());
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if y.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if ridge.is_nan() || ridge < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "ridge must be non-negative, got {ridge}"
        )));
    }

    let means: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64)
        .collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let scales: Vec<f64> = (0..d)
        .map(|j| {
            let s = (0..n).fold(0.0f64, |m, i| m.max((x.get(i, j) - means[j]).abs()));
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let z = |i: usize, j: usize| (x.get(i, j) - means[j]) / scales[j];

    // (S Xc' Xc S + ridge S^2) v = S Xc' yc, with w = S v
    let mut a = vec![0.0; d * d];
    let mut b = vec![0.0; d];
    let mut row = vec![0.0; d];
    for (i, yi) in y.iter().enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = z(i, j);
        }
        let yc = yi - y_mean;
        for j in 0..d {
            b[j] += row[j] * yc;
            for k in 0..=j {
                a[j * d + k] += row[j] * row[k];
            }
        }
    }
    for j in 0..d {
        for k in 0..j {
            a[k * d + j] = a[j * d + k];
        }
        a[j * d + j] += ridge / (scales[j] * scales[j]);
    }

    let v = cholesky_solve(&mut a, &b, d, ridge == 0.0)?;
    let weights: Vec<f64> = v.iter().zip(&scales).map(|(vj, s)| vj / s).collect();
    let intercept = y_mean - weights.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>();
    Ok(LinearModel { weights, intercept })
}

/// Solves `A v = b` for symmetric positive (semi)definite `A`, in place.
fn cholesky_solve(a: &mut [f64], b: &[f64], d: usize, strict: bool) -> Result<Vec<f64>> {
    let max_diag = (0..d).fold(0.0f64, |m, j| m.max(a[j * d + j]));
    let tol = 1e-12 * max_diag.max(f64::MIN_POSITIVE);
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= a[j * d + k] * a[j * d + k];
        }
        if diag <= 0.0 || (strict && diag <= tol) {
            return Err(Error::SingularSystem);
        }
        let l = diag.sqrt();
        a[j * d + j] = l;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = s / l;
        }
    }
    let mut t = vec![0.0; d];
    for i in 0..d {
        let s = b[i] - (0..i).map(|k| a[i * d + k] * t[k]).sum::<f64>();
        t[i] = s / a[i * d + i];
    }
    let mut v = vec![0.0; d];
    for i in (0..d).rev() {
        let s = t[i] - (i + 1..d).map(|k| a[k * d + i] * v[k]).sum::<f64>();
        v[i] = s / a[i * d + i];
    }
    Ok(v)
}
