//! Grid sweeps over the number of stages `k` and the threshold `t_y`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::matrix::Matrix;
use crate::refine::{train_refinement, RefineConfig};

pub const DEFAULT_K_GRID: [usize; 7] = [0, 1, 2, 3, 4, 5, 6];
/// 0%, 1%, 3%, 6%, 12%, 25%, 50% and 80% of the largest residual.
pub const DEFAULT_TY_GRID: [f64; 8] = [0.0, 0.01, 0.03, 0.06, 0.12, 0.25, 0.50, 0.80];

/// Digitized train/test partition.
#[derive(Debug, Clone)]
pub struct TrainTest {
    pub x_train: Matrix,
    pub y_train: Vec<f64>,
    pub x_test: Matrix,
    pub y_test: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    K,
    Ty,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::K => "k",
            SweepParam::Ty => "ty",
        })
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(SweepParam::K),
            "ty" | "t_y" => Ok(SweepParam::Ty),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep parameter `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub value: f64,
    pub report: EvalReport,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub param: SweepParam,
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "param,value,rho,mse,mae,train_s,predict_s";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{},{:.6},{:.6}",
                self.param,
                e.value,
                e.report.spearman_rho,
                e.report.mse,
                e.report.mae,
                e.train_seconds,
                e.predict_seconds
            )?;
        }
        Ok(())
    }

    /// Whitespace-separated table with a `#` header, readable by gnuplot.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# {:>8} {:>10} {:>12} {:>12} {:>10} {:>10}",
            self.param, "rho", "mse", "mae", "train_s", "predict_s"
        )?;
        for e in &self.entries {
            writeln!(
                w,
                "{:>10} {:>10.6} {:>12.6} {:>12.6} {:>10.3} {:>10.3}",
                e.value,
                e.report.spearman_rho,
                e.report.mse,
                e.report.mae,
                e.train_seconds,
                e.predict_seconds
            )?;
        }
        Ok(())
    }
}

fn check_grid(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("sweep grid is empty".into()));
    }
    if values
        .windows(2)
        .any(|p| p[0].partial_cmp(&p[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::InvalidConfig(
            "sweep grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn run_entry(data: &TrainTest, config: &RefineConfig, value: f64) -> Result<SweepEntry> {
    let start = Instant::now();
    let model = train_refinement(&data.x_train, &data.y_train, config)?;
    let train_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let predictions = model.predict_all(&data.x_test);
    let predict_seconds = start.elapsed().as_secs_f64();
    Ok(SweepEntry {
        value,
        report: EvalReport::compute(&predictions, &data.y_test)?,
        train_seconds,
        predict_seconds,
    })
}

/// One model per `k`, with every other setting (including `t_y`) taken from
/// `config`. All entries share `config.seed`, so the stage-`j` components
/// are identical across entries and the grid is nested.
pub fn sweep_k(data: &TrainTest, config: &RefineConfig, k_values: &[usize]) -> Result<SweepResult> {
    check_grid(&k_values.iter().map(|&k| k as f64).collect::<Vec<_>>())?;
    let entries = k_values
        .iter()
        .map(|&k| run_entry(data, &RefineConfig { k, ..*config }, k as f64))
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        param: SweepParam::K,
        entries,
    })
}

/// One model per `t_y`, with `k` and the rest taken from `config`.
pub fn sweep_ty(data: &TrainTest, config: &RefineConfig, ty_values: &[f64]) -> Result<SweepResult> {
    check_grid(ty_values)?;
    let entries = ty_values
        .iter()
        .map(|&t_y| run_entry(data, &RefineConfig { t_y, ..*config }, t_y))
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        param: SweepParam::Ty,
        entries,
    })
}

pub fn sweep(
    data: &TrainTest,
    config: &RefineConfig,
    param: SweepParam,
    grid: &[f64],
) -> Result<SweepResult> {
    match param {
        SweepParam::K => {
            let ks = grid
                .iter()
                .map(|&v| {
                    if v >= 0.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(Error::InvalidConfig(format!(
                            "k must be a non-negative integer, got {v}"
                        )))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            sweep_k(data, config, &ks)
        }
        SweepParam::Ty => sweep_ty(data, config, grid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::ForestParams;
    use crate::refine::train_refinement;
    use rand::{Rng, SeedableRng};

    fn split() -> TrainTest {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let mut gen = |n: usize| {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..15).map(|_| rng.random::<f64>()).collect())
                .collect();
            let y: Vec<f64> = rows.iter().map(|r| 5.0 * r[0] + r[1]).collect();
            (Matrix::from_rows(&rows).unwrap(), y)
        };
        let (x_train, y_train) = gen(150);
        let (x_test, y_test) = gen(40);
        TrainTest {
            x_train,
            y_train,
            x_test,
            y_test,
        }
    }

    fn config() -> RefineConfig {
        RefineConfig {
            base: ForestParams {
                tree_count: 10,
                ..Default::default()
            },
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn k_zero_equals_base_forest_evaluation() {
        let data = split();
        let result = sweep_k(&data, &config(), &[0]).unwrap();
        assert_eq!(result.entries.len(), 1);
        let model = train_refinement(
            &data.x_train,
            &data.y_train,
            &RefineConfig { k: 0, ..config() },
        )
        .unwrap();
        let base = model.base().predict_all(&data.x_test);
        assert_eq!(
            result.entries[0].report,
            EvalReport::compute(&base, &data.y_test).unwrap()
        );
    }

    #[test]
    fn default_ty_grid_is_ascending_standard_values() {
        let mut descending = vec![0.80, 0.50, 0.25, 0.12, 0.06, 0.03, 0.01, 0.00];
        descending.reverse();
        assert_eq!(DEFAULT_TY_GRID.to_vec(), descending);
    }

    #[test]
    fn grid_must_increase() {
        let data = split();
        assert!(sweep_ty(&data, &config(), &[0.5, 0.1]).is_err());
        assert!(sweep_k(&data, &config(), &[]).is_err());
        assert!(sweep(&data, &config(), SweepParam::K, &[1.5]).is_err());
    }

    #[test]
    fn csv_layout() {
        let data = split();
        let result = sweep_ty(&data, &RefineConfig { k: 1, ..config() }, &[0.0, 0.25]).unwrap();
        let mut buf = Vec::new();
        result.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SweepResult::CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("ty,0,"));
        assert!(lines[2].starts_with("ty,0.25,"));
        assert_eq!(lines[2].split(',').count(), 7);

        let mut table = Vec::new();
        result.write_table(&mut table).unwrap();
        assert!(String::from_utf8(table).unwrap().starts_with("#"));
    }
}
