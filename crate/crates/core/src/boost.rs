//! Discrete AdaBoost over decision stumps.
//!
//! Used as the binary gate that decides whether a refinement stage should
//! compensate a sample (`+1`) or leave it alone (`-1`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const EPS_CLAMP: f64 = 1e-10;
const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Axis-aligned threshold classifier. With `polarity = +1` samples with
/// `x[feature] > threshold` are labeled `+1`; `polarity = -1` flips that.
///
/// A threshold of negative infinity gives a constant classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
}

impl Stump {
    pub fn constant(label: i8) -> Self {
        Stump {
            feature: 0,
            threshold: f64::NEG_INFINITY,
            polarity: label,
        }
    }

    #[inline]
    pub fn predict(&self, x: &[f64]) -> i8 {
        if x[self.feature] > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }

    pub fn weighted_error(&self, x: &Matrix, z: &[i8], w: &[f64]) -> f64 {
        (0..x.rows())
            .filter(|&i| self.predict(x.row(i)) != z[i])
            .map(|i| w[i])
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub rounds: usize,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams { rounds: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostClassifier {
    pub(crate) stages: Vec<(Stump, f64)>,
}

impl BoostClassifier {
    pub fn from_stages(stages: Vec<(Stump, f64)>) -> Result<Self> {
        if stages
            .iter()
            .any(|(s, a)| !a.is_finite() || s.polarity.abs() != 1)
        {
            return Err(Error::CorruptModel("invalid boosting stage".into()));
        }
        Ok(BoostClassifier { stages })
    }

    pub fn stages(&self) -> &[(Stump, f64)] {
        &self.stages
    }

    /// Weighted vote `sum(alpha * h(x))`.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.stages
            .iter()
            .map(|(s, a)| a * f64::from(s.predict(x)))
            .sum()
    }

    /// Label and margin; a zero margin counts as `+1`.
    pub fn predict(&self, x: &[f64]) -> (i8, f64) {
        let m = self.margin(x);
        (if m >= 0.0 { 1 } else { -1 }, m)
    }

    pub fn predict_label(&self, x: &[f64]) -> i8 {
        self.predict(x).0
    }
}

fn check_inputs(x: &Matrix, z: &[i8], w: Option<&[f64]>) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::EmptyData);
    }
    if z.len() != x.rows() {
        return Err(Error::ShapeMismatch {
            expected: x.rows(),
            found: z.len(),
        });
    }
    if z.iter().any(|&v| v != 1 && v != -1) {
        return Err(Error::InvalidConfig("class labels must be -1 or +1".into()));
    }
    if let Some(w) = w {
        if w.len() != x.rows() {
            return Err(Error::ShapeMismatch {
                expected: x.rows(),
                found: w.len(),
            });
        }
        let sum: f64 = w.iter().sum();
        if w.iter().any(|&v| v.is_nan() || v < 0.0) || (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights { sum });
        }
    }
    Ok(())
}

/// Per-feature sort orders, reused across boosting rounds.
struct StumpSearch<'a> {
    x: &'a Matrix,
    sorted: Vec<Vec<usize>>,
}

impl<'a> StumpSearch<'a> {
    fn new(x: &'a Matrix) -> Self {
        let sorted = (0..x.cols())
            .map(|f| {
                let mut idx: Vec<usize> = (0..x.rows()).collect();
                idx.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
                idx
            })
            .collect();
        StumpSearch { x, sorted }
    }

    /// Minimum weighted-error stump. Candidates per feature are the
    /// always-positive threshold and every midpoint between consecutive
    /// distinct values, each with both polarities. Ties go to the lowest
    /// feature, then the lowest threshold, then polarity `+1`.
    fn best(&self, z: &[i8], w: &[f64]) -> (Stump, f64) {
        let total: f64 = w.iter().sum();
        let neg: f64 = z
            .iter()
            .zip(w)
            .filter(|(&c, _)| c < 0)
            .map(|(_, &wi)| wi)
            .sum();
        let mut best = (Stump::constant(1), f64::INFINITY);
        let mut consider = |stump: Stump, err: f64| {
            if err < best.1 {
                best = (stump, err);
            }
        };
        for (f, order) in self.sorted.iter().enumerate() {
            // error of "x > t -> +1" with every sample on the positive side
            let mut err_pos = neg;
            consider(
                Stump {
                    feature: f,
                    threshold: f64::NEG_INFINITY,
                    polarity: 1,
                },
                err_pos,
            );
            consider(
                Stump {
                    feature: f,
                    threshold: f64::NEG_INFINITY,
                    polarity: -1,
                },
                total - err_pos,
            );
            for k in 0..order.len() - 1 {
                let i = order[k];
                err_pos += if z[i] > 0 { w[i] } else { -w[i] };
                let (a, b) = (self.x.get(i, f), self.x.get(order[k + 1], f));
                if a == b {
                    continue;
                }
                let t = midpoint(a, b);
                consider(
                    Stump {
                        feature: f,
                        threshold: t,
                        polarity: 1,
                    },
                    err_pos,
                );
                consider(
                    Stump {
                        feature: f,
                        threshold: t,
                        polarity: -1,
                    },
                    total - err_pos,
                );
            }
        }
        let stump = best.0;
        // recompute exactly; the running sums drift slightly
        let err = stump.weighted_error(self.x, z, w).clamp(0.0, 1.0);
        (stump, err)
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) * 0.5;
    if mid < b {
        mid
    } else {
        a
    }
}

/// Stump minimizing weighted 0-1 loss. `w` must be a probability vector.
pub fn fit_stump(x: &Matrix, z: &[i8], w: &[f64]) -> Result<(Stump, f64)> {
    check_inputs(x, z, Some(w))?;
    Ok(StumpSearch::new(x).best(z, w))
}

pub fn fit_boost(x: &Matrix, z: &[i8], params: &BoostParams) -> Result<BoostClassifier> {
    fit_boost_observed(x, z, params, |_| {})
}

/// `fit_boost` that hands the re-normalized sample weights to `observe`
/// after every round.
pub(crate) fn fit_boost_observed(
    x: &Matrix,
    z: &[i8],
    params: &BoostParams,
    mut observe: impl FnMut(&[f64]),
) -> Result<BoostClassifier> {
    check_inputs(x, z, None)?;
    if params.rounds == 0 {
        return Err(Error::InvalidConfig(
            "boosting needs at least one round".into(),
        ));
    }
    let positives = z.iter().filter(|&&c| c > 0).count();
    if positives == 0 || positives == z.len() {
        return Ok(BoostClassifier {
            stages: vec![(Stump::constant(z[0]), 1.0)],
        });
    }

    let n = x.rows();
    let search = StumpSearch::new(x);
    let mut w = vec![1.0 / n as f64; n];
    let mut stages = Vec::with_capacity(params.rounds);
    for _ in 0..params.rounds {
        let (stump, err) = search.best(z, &w);
        if err >= 0.5 {
            break;
        }
        let eps = err.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP);
        let alpha = 0.5 * ((1.0 - eps) / eps).ln();
        stages.push((stump, alpha));
        if err == 0.0 {
            break;
        }
        for i in 0..n {
            w[i] *= (-alpha * f64::from(z[i]) * f64::from(stump.predict(x.row(i)))).exp();
        }
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= sum);
        observe(&w);
    }
    Ok(BoostClassifier { stages })
}
