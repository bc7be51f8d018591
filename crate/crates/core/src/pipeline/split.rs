//! Train/test partitions: random (Set-A) or by post date (Set-B).

use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::dataset::Dataset;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    /// Seeded shuffle; the last `test_count` records of the permutation are the test set.
    RandomSetA,
    /// Stable sort by post date; the `test_count` latest records are the test set.
    TimeOrderSetB,
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" | "a" | "seta" => Ok(SplitMode::RandomSetA),
            "time" | "b" | "setb" => Ok(SplitMode::TimeOrderSetB),
            other => Err(Error::InvalidConfig(format!(
                "unknown split mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub test_count: usize,
    /// Only used by [`SplitMode::RandomSetA`].
    pub seed: u64,
}

/// Test-set size proportional to 5,614 test posts out of 305,614,
/// clamped to `1..n`.
pub fn default_test_count(n: usize) -> usize {
    let scaled = (n as f64 * 5614.0 / 305_614.0).round() as usize;
    scaled.clamp(1, n.saturating_sub(1).max(1))
}

/// Train and test indices into a collection of `dates.len()` records.
pub fn split_indices(dates: &[Option<i64>], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = dates.len();
    if spec.test_count == 0 || spec.test_count >= n {
        return Err(Error::TestCountTooLarge {
            test_count: spec.test_count,
            n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    match spec.mode {
        SplitMode::RandomSetA => order.shuffle(&mut rng_from_seed(spec.seed)),
        // absent dates sort first; sort_by_key is stable
        SplitMode::TimeOrderSetB => order.sort_by_key(|&i| dates[i].unwrap_or(i64::MIN)),
    }
    let test = order.split_off(n - spec.test_count);
    Ok((order, test))
}

pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !dataset.has_labels() {
        return Err(Error::MissingLabels);
    }
    let dates: Vec<Option<i64>> = dataset.records.iter().map(|r| r.post_date).collect();
    let (train, test) = split_indices(&dates, spec)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}
