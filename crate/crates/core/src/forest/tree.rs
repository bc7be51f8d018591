//! CART regression tree grown by greedy variance reduction.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Number of non-constant features examined at each node.
    pub features_per_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 5,
            features_per_split: 5,
        }
    }
}

impl TreeParams {
    /// Fully grown tree considering every feature at every node.
    pub fn interpolating(n_features: usize) -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: n_features,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if self.features_per_split == 0 || self.features_per_split > n_features {
            return Err(Error::InvalidConfig(format!(
                "features_per_split must be in 1..={n_features}, got {}",
                self.features_per_split
            )));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidConfig("max_depth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        samples: usize,
        /// Decrease in summed squared error achieved by this split.
        impurity_decrease: f64,
    },
}

/// Regression tree stored as a flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) n_features: usize,
}

impl RegressionTree {
    /// Rebuilds a tree from raw nodes, checking that child links are sane.
    pub fn from_nodes(nodes: Vec<Node>, n_features: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::CorruptModel("tree without nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            if let Node::Split {
                feature,
                left,
                right,
                ..
            } = *node
            {
                if feature >= n_features
                    || left <= i
                    || right <= i
                    || left >= nodes.len()
                    || right >= nodes.len()
                {
                    return Err(Error::CorruptModel(format!("bad split node {i}")));
                }
            }
        }
        Ok(RegressionTree { nodes, n_features })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value, .. } => Some(*value),
            _ => None,
        })
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Adds this tree's per-feature impurity decrease into `acc`.
    pub(crate) fn accumulate_importance(&self, acc: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Split {
                feature,
                impurity_decrease,
                ..
            } = *node
            {
                acc[feature] += impurity_decrease;
            }
        }
    }
}

pub(crate) fn check_training_data(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::EmptyData);
    }
    if y.len() != x.rows() {
        return Err(Error::ShapeMismatch {
            expected: x.rows(),
            found: y.len(),
        });
    }
    if !x.all_finite() || !y.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidConfig(
            "training data contains non-finite values".into(),
        ));
    }
    Ok(())
}

pub fn fit_tree(x: &Matrix, y: &[f64], params: &TreeParams, seed: u64) -> Result<RegressionTree> {
    check_training_data(x, y)?;
    params.validate(x.cols())?;
    let indices: Vec<usize> = (0..x.rows()).collect();
    let mut rng = rng_from_seed(seed);
    Ok(grow(x, y, indices, params, &mut rng))
}

struct Pending {
    node: usize,
    depth: usize,
    indices: Vec<usize>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Grows a tree on `indices` (which may repeat rows, as in a bootstrap draw).
pub(crate) fn grow(
    x: &Matrix,
    y: &[f64],
    indices: Vec<usize>,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> RegressionTree {
    let mut nodes = vec![Node::Leaf {
        value: 0.0,
        samples: 0,
    }];
    let mut stack = vec![Pending {
        node: 0,
        depth: 0,
        indices,
    }];
    let mut order: Vec<usize> = (0..x.cols()).collect();
    let mut scratch: Vec<(f64, f64)> = Vec::new();

    while let Some(Pending {
        node,
        depth,
        indices,
    }) = stack.pop()
    {
        let n = indices.len();
        let mean = indices.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
        let leaf = Node::Leaf {
            value: mean,
            samples: n,
        };

        let depth_ok = params.max_depth.is_none_or(|d| depth < d);
        let constant = indices.iter().all(|&i| y[i] == y[indices[0]]);
        if !depth_ok || constant || n < 2 * params.min_samples_leaf {
            nodes[node] = leaf;
            continue;
        }

        order.shuffle(rng);
        let mut candidates: Vec<usize> = Vec::with_capacity(params.features_per_split);
        for &f in &order {
            if candidates.len() == params.features_per_split {
                break;
            }
            let first = x.get(indices[0], f);
            if indices.iter().any(|&i| x.get(i, f) != first) {
                candidates.push(f);
            }
        }
        candidates.sort_unstable();

        let mut best: Option<SplitChoice> = None;
        for &f in &candidates {
            scratch.clear();
            scratch.extend(indices.iter().map(|&i| (x.get(i, f), y[i] - mean)));
            if let Some(choice) = best_threshold(&mut scratch, params.min_samples_leaf) {
                if best.as_ref().is_none_or(|b| choice.1 > b.gain) {
                    best = Some(SplitChoice {
                        feature: f,
                        threshold: choice.0,
                        gain: choice.1,
                    });
                }
            }
        }

        let Some(split) = best.filter(|s| s.gain > 0.0) else {
            nodes[node] = leaf;
            continue;
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| x.get(i, split.feature) <= split.threshold);
        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf {
            value: 0.0,
            samples: 0,
        });
        nodes.push(Node::Leaf {
            value: 0.0,
            samples: 0,
        });
        nodes[node] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            samples: n,
            impurity_decrease: split.gain,
        };
        stack.push(Pending {
            node: right,
            depth: depth + 1,
            indices: right_idx,
        });
        stack.push(Pending {
            node: left,
            depth: depth + 1,
            indices: left_idx,
        });
    }

    RegressionTree {
        nodes,
        n_features: x.cols(),
    }
}

/// Best midpoint threshold over `(value, centered label)` pairs.
///
/// Returns `(threshold, gain)` where gain is the drop in summed squared
/// error. Ties keep the lowest threshold.
fn best_threshold(pairs: &mut [(f64, f64)], min_leaf: usize) -> Option<(f64, f64)> {
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let base = total * total / n as f64;
    let mut left_sum = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n - 1 {
        left_sum += pairs[i].1;
        let nl = i + 1;
        let nr = n - nl;
        let (a, b) = (pairs[i].0, pairs[i + 1].0);
        if a == b || nl < min_leaf || nr < min_leaf {
            continue;
        }
        let right_sum = total - left_sum;
        let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - base;
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((midpoint(a, b), gain));
        }
    }
    best
}

/// A threshold `t` with `a <= t < b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) * 0.5;
    if mid < b {
        mid
    } else {
        a
    }
}
