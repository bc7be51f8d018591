//! Bagged random-forest regressor.
//!
//! Each tree is grown on a bootstrap resample with its own seed derived from
//! the forest seed and the tree index, so the fitted forest does not depend
//! on how rayon schedules the trees.

mod tree;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use tree::{fit_tree, Node, RegressionTree, TreeParams};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub tree: TreeParams,
    pub tree_count: usize,
    /// Draw a size-N bootstrap sample per tree. Disabling it is mostly useful
    /// for tests and single-tree compensators.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            tree: TreeParams::default(),
            tree_count: 100,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    /// One fully grown tree on the unresampled data.
    pub fn single_interpolating_tree(n_features: usize) -> Self {
        ForestParams {
            tree: TreeParams::interpolating(n_features),
            tree_count: 1,
            bootstrap: false,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.tree_count == 0 {
            return Err(Error::InvalidConfig("tree_count must be at least 1".into()));
        }
        self.tree.validate(n_features)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub(crate) trees: Vec<RegressionTree>,
    pub(crate) params: ForestParams,
    pub(crate) seed: u64,
}

pub fn fit_forest(x: &Matrix, y: &[f64], params: &ForestParams, seed: u64) -> Result<Forest> {
    tree::check_training_data(x, y)?;
    params.validate(x.cols())?;
    let n = x.rows();
    let trees = (0..params.tree_count)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, t as u64));
            let indices: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            tree::grow(x, y, indices, &params.tree, &mut rng)
        })
        .collect();
    Ok(Forest {
        trees,
        params: *params,
        seed,
    })
}

impl Forest {
    pub fn from_parts(trees: Vec<RegressionTree>, params: ForestParams, seed: u64) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::CorruptModel("forest without trees".into()));
        }
        Ok(Forest {
            trees,
            params,
            seed,
        })
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_features(&self) -> usize {
        self.trees[0].n_features()
    }

    /// Mean of the per-tree predictions, summed in tree order.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict_all(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .into_par_iter()
            .map(|i| self.predict(x.row(i)))
            .collect()
    }

    /// Mean decrease in impurity per feature, normalized to sum to one.
    /// All zeros when no tree has a split.
    pub fn feature_importance(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_features()];
        for t in &self.trees {
            t.accumulate_importance(&mut acc);
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            acc.iter_mut().for_each(|v| *v /= total);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn random_data(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..15).map(|_| rng.random::<f64>()).collect())
            .collect();
        let y = rows
            .iter()
            .map(|r| 4.0 * r[0] + r[3] * r[7] + 0.1 * rng.random::<f64>())
            .collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    fn small_forest() -> ForestParams {
        ForestParams {
            tree_count: 12,
            ..Default::default()
        }
    }

    #[test]
    fn constant_labels() {
        let (x, _) = random_data(40, 1);
        let forest = fit_forest(&x, &[2.5; 40], &small_forest(), 3).unwrap();
        assert!(forest.trees().iter().all(|t| t.nodes().len() == 1));
        assert_eq!(forest.predict(x.row(0)), 2.5);
        assert!(forest.feature_importance().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_tree_without_bootstrap_equals_fit_tree() {
        let (x, y) = random_data(80, 2);
        let params = ForestParams {
            tree_count: 1,
            bootstrap: false,
            ..Default::default()
        };
        let forest = fit_forest(&x, &y, &params, 99).unwrap();
        let tree = fit_tree(&x, &y, &params.tree, derive_seed(99, 0)).unwrap();
        assert_eq!(forest.trees()[0], tree);
        for i in 0..x.rows() {
            assert_eq!(forest.predict(x.row(i)), tree.predict(x.row(i)));
        }
    }

    #[test]
    fn prediction_is_mean_of_trees() {
        let (x, y) = random_data(120, 3);
        let forest = fit_forest(&x, &y, &small_forest(), 5).unwrap();
        let (q, _) = random_data(100, 4);
        for row in q.iter_rows() {
            let outs: Vec<f64> = forest.trees().iter().map(|t| t.predict(row)).collect();
            let mean = outs.iter().sum::<f64>() / outs.len() as f64;
            assert!((forest.predict(row) - mean).abs() <= 1e-12);
        }
    }

    #[test]
    fn two_tree_mean() {
        let leaf = |v| {
            RegressionTree::from_nodes(
                vec![Node::Leaf {
                    value: v,
                    samples: 1,
                }],
                15,
            )
            .unwrap()
        };
        let forest =
            Forest::from_parts(vec![leaf(1.0), leaf(3.0)], ForestParams::default(), 0).unwrap();
        assert_eq!(forest.predict(&[0.0; 15]), 2.0);
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = random_data(150, 5);
        let a = fit_forest(&x, &y, &small_forest(), 21).unwrap();
        let b = fit_forest(&x, &y, &small_forest(), 21).unwrap();
        assert_eq!(a, b);
        let (q, _) = random_data(100, 6);
        for row in q.iter_rows() {
            assert_eq!(a.predict(row).to_bits(), b.predict(row).to_bits());
        }
        let c = fit_forest(&x, &y, &small_forest(), 22).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn importance_finds_active_feature() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|_| {
                let mut r: Vec<f64> = (0..15).map(|_| 1e-3 * rng.random::<f64>()).collect();
                r[0] = rng.random_range(0.0..10.0);
                r
            })
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * r[0]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let imp = fit_forest(&x, &y, &small_forest(), 1)
            .unwrap()
            .feature_importance();
        let argmax = (0..15).max_by(|&a, &b| imp[a].total_cmp(&imp[b])).unwrap();
        assert_eq!(argmax, 0);
        assert!((imp.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn tree_order_does_not_matter() {
        let (x, y) = random_data(60, 9);
        let forest = fit_forest(&x, &y, &small_forest(), 4).unwrap();
        let mut reversed = forest.clone();
        reversed.trees.reverse();
        for row in x.iter_rows() {
            assert!((forest.predict(row) - reversed.predict(row)).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_trees_rejected() {
        let (x, y) = random_data(10, 1);
        let params = ForestParams {
            tree_count: 0,
            ..Default::default()
        };
        assert!(matches!(
            fit_forest(&x, &y, &params, 0),
            Err(Error::InvalidConfig(_))
        ));
    }
}
