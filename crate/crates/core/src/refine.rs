//! Iterative residual refinement around a random-forest base regressor.
//!
//! Training starts from the base forest's in-sample predictions. Each stage
//! then computes residuals against the running prediction, labels samples
//! whose absolute residual exceeds `t_y * max|R|` as extreme, fits an
//! AdaBoost gate on those labels and a residual forest (the compensator) on
//! the extreme samples, and adds the compensator's output to the running
//! prediction of the extreme samples.
//!
//! At prediction time each stage adds its compensator whenever its gate
//! fires. With `t_y = 0` every sample is extreme, so stages carry no gate
//! and always compensate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::{fit_boost, BoostClassifier, BoostParams};
use crate::error::{Error, Result};
use crate::eval::mse;
use crate::forest::{fit_forest, Forest, ForestParams};
use crate::matrix::Matrix;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Number of refinement stages.
    pub k: usize,
    /// Extreme-residual threshold as a fraction of the largest |residual|.
    pub t_y: f64,
    pub base: ForestParams,
    /// Compensator forest parameters; `None` reuses `base`.
    pub compensator: Option<ForestParams>,
    pub boost: BoostParams,
    pub seed: u64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            k: 2,
            t_y: 0.0,
            base: ForestParams::default(),
            compensator: None,
            boost: BoostParams::default(),
            seed: 0,
        }
    }
}

impl RefineConfig {
    /// Best-accuracy preset: four stages, compensate everything.
    pub fn accurate() -> Self {
        RefineConfig {
            k: 4,
            t_y: 0.0,
            ..Default::default()
        }
    }

    /// Two stages that only compensate residuals above 3% of the largest.
    pub fn thresholded() -> Self {
        RefineConfig {
            k: 2,
            t_y: 0.03,
            ..Default::default()
        }
    }

    /// Cheap preset: a single gated stage.
    pub fn fast() -> Self {
        RefineConfig {
            k: 1,
            t_y: 0.25,
            ..Default::default()
        }
    }

    pub fn compensator_params(&self) -> &ForestParams {
        self.compensator.as_ref().unwrap_or(&self.base)
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.t_y) {
            return Err(Error::InvalidConfig(format!(
                "t_y must be in [0, 1], got {}",
                self.t_y
            )));
        }
        self.base.validate(n_features)?;
        self.compensator_params().validate(n_features)?;
        if self.boost.rounds == 0 {
            return Err(Error::InvalidConfig(
                "boost rounds must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `y - p`, componentwise.
pub fn compute_residuals(y: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    if y.len() != p.len() {
        return Err(Error::ShapeMismatch {
            expected: y.len(),
            found: p.len(),
        });
    }
    Ok(y.iter().zip(p).map(|(a, b)| a - b).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualLabels {
    pub residuals: Vec<f64>,
    pub threshold: f64,
    /// `+1` for extreme residuals, `-1` otherwise.
    pub labels: Vec<i8>,
}

impl ResidualLabels {
    pub fn extreme_indices(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &z)| z > 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn extreme_count(&self) -> usize {
        self.labels.iter().filter(|&&z| z > 0).count()
    }
}

/// Splits residuals into extreme (`|R| > t_y * max|R|`) and regular.
///
/// `t_y = 0` labels everything extreme, zero residuals included. When the
/// strict comparison selects nothing but some residual is non-zero (e.g.
/// `t_y = 1`), the residuals attaining the maximum are labeled extreme.
pub fn threshold_labels(residuals: &[f64], t_y: f64) -> Result<ResidualLabels> {
    if residuals.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&t_y) {
        return Err(Error::InvalidConfig(format!(
            "t_y must be in [0, 1], got {t_y}"
        )));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidConfig("residuals must be finite".into()));
    }
    let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let threshold = t_y * max_abs;
    let mut labels: Vec<i8> = if t_y == 0.0 {
        vec![1; residuals.len()]
    } else {
        residuals
            .iter()
            .map(|r| if r.abs() > threshold { 1 } else { -1 })
            .collect()
    };
    if max_abs > 0.0 && labels.iter().all(|&z| z < 0) {
        for (z, r) in labels.iter_mut().zip(residuals) {
            if r.abs() == max_abs {
                *z = 1;
            }
        }
    }
    Ok(ResidualLabels {
        residuals: residuals.to_vec(),
        threshold,
        labels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// Absent when the stage compensates every sample (`t_y = 0`).
    pub gate: Option<BoostClassifier>,
    /// Absent for a degenerate stage that had no extreme samples.
    pub compensator: Option<Forest>,
}

impl Stage {
    pub fn fires(&self, x: &[f64]) -> bool {
        self.gate.as_ref().is_none_or(|g| g.predict_label(x) > 0)
    }

    /// Amount this stage adds to the running prediction for `x`.
    pub fn correction(&self, x: &[f64]) -> f64 {
        match &self.compensator {
            Some(c) if self.fires(x) => c.predict(x),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Training MSE of the running prediction after this iteration.
    pub train_mse: f64,
    /// Residual threshold used to select extreme samples (0 for the base).
    pub threshold: f64,
    pub extreme_count: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementModel {
    pub(crate) base: Forest,
    pub(crate) stages: Vec<Stage>,
    pub(crate) config: RefineConfig,
    pub(crate) trace: Vec<TraceEntry>,
}

pub fn train_refinement(x: &Matrix, y: &[f64], config: &RefineConfig) -> Result<RefinementModel> {
    if x.rows() == 0 {
        return Err(Error::EmptyData);
    }
    if x.rows() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: x.rows(),
        });
    }
    if y.len() != x.rows() {
        return Err(Error::ShapeMismatch {
            expected: x.rows(),
            found: y.len(),
        });
    }
    config.validate(x.cols())?;

    let base = fit_forest(x, y, &config.base, derive_seed(config.seed, 0))?;
    let mut pred = base.predict_all(x);
    let mut trace = vec![TraceEntry {
        iteration: 0,
        train_mse: mse(&pred, y)?,
        threshold: 0.0,
        extreme_count: x.rows(),
        degenerate: false,
    }];

    let mut stages = Vec::with_capacity(config.k);
    for i in 1..=config.k {
        let residuals = compute_residuals(y, &pred)?;
        let labels = threshold_labels(&residuals, config.t_y)?;
        let extreme = labels.extreme_indices();

        let gate = if config.t_y > 0.0 {
            Some(fit_boost(x, &labels.labels, &config.boost)?)
        } else {
            None
        };
        let compensator = if extreme.is_empty() {
            None
        } else {
            let xs = x.select_rows(&extreme);
            let rs: Vec<f64> = extreme.iter().map(|&j| residuals[j]).collect();
            Some(fit_forest(
                &xs,
                &rs,
                config.compensator_params(),
                derive_seed(config.seed, i as u64),
            )?)
        };

        if let Some(c) = &compensator {
            let updates: Vec<f64> = extreme.par_iter().map(|&j| c.predict(x.row(j))).collect();
            for (&j, u) in extreme.iter().zip(updates) {
                pred[j] += u;
            }
        }
        trace.push(TraceEntry {
            iteration: i,
            train_mse: mse(&pred, y)?,
            threshold: labels.threshold,
            extreme_count: extreme.len(),
            degenerate: compensator.is_none(),
        });
        stages.push(Stage { gate, compensator });
    }

    Ok(RefinementModel {
        base,
        stages,
        config: *config,
        trace,
    })
}

impl RefinementModel {
    pub fn from_parts(
        base: Forest,
        stages: Vec<Stage>,
        config: RefineConfig,
        trace: Vec<TraceEntry>,
    ) -> Result<Self> {
        if stages.len() != config.k {
            return Err(Error::CorruptModel(format!(
                "{} stages for k = {}",
                stages.len(),
                config.k
            )));
        }
        Ok(RefinementModel {
            base,
            stages,
            config,
            trace,
        })
    }

    pub fn base(&self) -> &Forest {
        &self.base
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn config(&self) -> &RefineConfig {
        &self.config
    }

    pub fn training_trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.predict_with_stages(x, self.stages.len())
    }

    /// Prediction using only the base forest and the first `stages` stages.
    pub fn predict_with_stages(&self, x: &[f64], stages: usize) -> f64 {
        let mut p = self.base.predict(x);
        for stage in &self.stages[..stages.min(self.stages.len())] {
            p += stage.correction(x);
        }
        p
    }

    pub fn predict_all(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .into_par_iter()
            .map(|i| self.predict(x.row(i)))
            .collect()
    }

    pub fn predict_all_with_stages(&self, x: &Matrix, stages: usize) -> Vec<f64> {
        (0..x.rows())
            .into_par_iter()
            .map(|i| self.predict_with_stages(x.row(i), stages))
            .collect()
    }
}

/// Free-function form of [`RefinementModel::predict`].
pub fn refine_predict(model: &RefinementModel, x: &[f64]) -> f64 {
    model.predict(x)
}
