use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_pair(a: &[f64], b: &[f64], min: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < min {
        return Err(if a.is_empty() {
            Error::EmptyInput
        } else {
            Error::TooFewSamples {
                needed: min,
                got: a.len(),
            }
        });
    }
    Ok(())
}

/// 1-based ranks; tied values share the mean of the positions they occupy.
pub fn average_ranks(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    Ok(ranks)
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    // sqrt of the product keeps identical rank vectors at exactly 1
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho as the Pearson correlation of average ranks, which stays
/// correct under ties. `None` when either input is constant.
pub fn spearman_rho_checked(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_pair(a, b, 2)?;
    Ok(pearson(&average_ranks(a)?, &average_ranks(b)?))
}

/// Spearman's rho; 0 when either input is constant.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(spearman_rho_checked(a, b)?.unwrap_or(0.0))
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 1)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

pub fn mae(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 1)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub spearman_rho: f64,
    pub mse: f64,
    pub mae: f64,
    pub n: usize,
    /// Set when rho was undefined (constant input) and reported as 0.
    pub rho_undefined: bool,
}

impl EvalReport {
    pub fn compute(predictions: &[f64], labels: &[f64]) -> Result<Self> {
        let rho = spearman_rho_checked(predictions, labels)?;
        Ok(EvalReport {
            spearman_rho: rho.unwrap_or(0.0),
            mse: mse(predictions, labels)?,
            mae: mae(predictions, labels)?,
            n: labels.len(),
            rho_undefined: rho.is_none(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_examples() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 30.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(average_ranks(&[5.0, 5.0]).unwrap(), vec![1.5, 1.5]);
        assert_eq!(
            average_ranks(&[7.0, 3.0, 7.0, 1.0]).unwrap(),
            vec![3.5, 2.0, 3.5, 1.0]
        );
        assert!(matches!(average_ranks(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(
            spearman_rho(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
            1.0
        );
        assert_eq!(
            spearman_rho(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0
        );
        // ranks of b are [1, 2, 3.5, 5, 3.5]; Pearson against [1..5] = 8 / sqrt(10 * 9.5)
        let expected = 8.0 / (10.0f64 * 9.5).sqrt();
        let rho = spearman_rho(&[1.0, 2.0, 3.0, 4.0, 5.0], &[5.0, 6.0, 7.0, 8.0, 7.0]).unwrap();
        assert!((rho - expected).abs() < 1e-12);
        assert!((rho - 0.8208).abs() < 1e-4);
    }

    #[test]
    fn spearman_errors_and_constant_input() {
        assert!(matches!(
            spearman_rho(&[1.0], &[1.0]),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(
            spearman_rho(&[1.0, 2.0], &[1.0]),
            Err(Error::ShapeMismatch { .. })
        ));
        assert_eq!(
            spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
        let report = EvalReport::compute(&[2.0, 2.0], &[1.0, 3.0]).unwrap();
        assert!(report.rho_undefined);
        assert_eq!(report.spearman_rho, 0.0);
    }

    #[test]
    fn error_metric_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 5.0);
        assert_eq!(mae(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 2.0);
        assert!(matches!(mse(&[], &[]), Err(Error::EmptyInput)));
    }

    fn distinct_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1000i32..1000, 2..60)
            .prop_map(|v| v.into_iter().map(f64::from).collect())
    }

    proptest! {
        #[test]
        fn ranks_sum_to_triangular(v in distinct_vec()) {
            let n = v.len() as f64;
            let sum: f64 = average_ranks(&v).unwrap().iter().sum();
            prop_assert!((sum - n * (n + 1.0) / 2.0).abs() < 1e-9);
        }

        #[test]
        fn monotone_transform_invariance(a in distinct_vec(), seed in any::<u64>()) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x * 7.0 + (i as u64 ^ seed) as f64 % 13.0).collect();
            let rho = spearman_rho(&a, &b).unwrap();
            let ta: Vec<f64> = a.iter().map(|x| x * x * x + 2.0 * x).collect();
            let tb: Vec<f64> = b.iter().map(|x| (x / 100.0).exp()).collect();
            prop_assert_eq!(rho, spearman_rho(&ta, &tb).unwrap());
        }

        #[test]
        fn self_and_negated(a in distinct_vec()) {
            let neg: Vec<f64> = a.iter().map(|x| -x).collect();
            if a.iter().any(|&x| x != a[0]) {
                prop_assert!((spearman_rho(&a, &a).unwrap() - 1.0).abs() < 1e-12);
                prop_assert!((spearman_rho(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn jensen_bound(a in distinct_vec(), b in distinct_vec()) {
            let n = a.len().min(b.len());
            let r = EvalReport::compute(&a[..n], &b[..n]).unwrap();
            prop_assert!(r.mae * r.mae <= r.mse * (1.0 + 1e-12));
            prop_assert!((-1.0..=1.0).contains(&r.spearman_rho));
        }
    }

    #[test]
    fn mse_equals_mae_squared_for_equal_errors() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [1.5, 1.5, 3.5, 3.5];
        assert_eq!(mse(&a, &b).unwrap(), mae(&a, &b).unwrap().powi(2));
    }

    #[test]
    fn metrics_match_two_pass_recomputation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100);
        let a: Vec<f64> = (0..100).map(|_| rng.random_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..100).map(|_| rng.random_range(-5.0..5.0)).collect();
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let mut sq = 0.0;
        let mut ab = 0.0;
        for d in &diffs {
            sq += d * d;
            ab += d.abs();
        }
        assert!((mse(&a, &b).unwrap() - sq / 100.0).abs() < 1e-12);
        assert!((mae(&a, &b).unwrap() - ab / 100.0).abs() < 1e-12);
    }
}
