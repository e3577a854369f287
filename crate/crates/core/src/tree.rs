//! CART regression tree over lag-embedded features.
//!
//! Splits minimize the summed squared error of the two children. Candidate
//! thresholds are midpoints between consecutive distinct feature values,
//! rows with `x[feature] <= threshold` go left, and ties between equally good
//! splits resolve to the lower feature index and then the lower threshold.

use alloc::boxed::Box;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::series::Exog;
use crate::{Error, Result};

/// Reductions closer than this (relative to the node's SSE) count as ties.
pub const SPLIT_TOLERANCE: f64 = 1e-9;

/// Design matrix `(x_1..x_k, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyData);
        }
        if rows.len() != targets.len() {
            return Err(Error::LengthMismatch {
                actual: targets.len(),
                forecast: rows.len(),
            });
        }
        let k = rows[0].len();
        if k == 0 {
            return Err(Error::InvalidConfig("feature rows must be nonempty".into()));
        }
        for row in &rows {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: row.len(),
                });
            }
        }
        let all = rows.iter().flatten().chain(&targets);
        if let Some(index) = all.clone().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, targets })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn n_features(&self) -> usize {
        self.rows[0].len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Feature vector used to predict the value that follows `values`:
/// the last `p` values newest first, then the newest clicks and sales when
/// `exog` is given.
pub fn lag_features(values: &[f64], exog: Option<&Exog>, p: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if n < p {
        return Err(Error::SeriesTooShort {
            needed: p,
            found: n,
        });
    }
    let mut x: Vec<f64> = values[n - p..].iter().rev().copied().collect();
    if let Some(e) = exog {
        let last = n.checked_sub(1).ok_or(Error::EmptySeries)?;
        x.push(e.clicks[last] as f64);
        x.push(e.sales[last] as f64);
    }
    Ok(x)
}

/// Row `t` holds `(x_{t-1}, ..., x_{t-p})`, plus `clicks_{t-1}, sales_{t-1}`
/// when `use_exog` is set and exog columns are present; the target is `x_t`.
pub fn lag_embed(
    values: &[f64],
    exog: Option<&Exog>,
    p: usize,
    use_exog: bool,
) -> Result<FeatureMatrix> {
    let n = values.len();
    if p == 0 {
        return Err(Error::InvalidConfig("lag order must be at least 1".into()));
    }
    if n <= p {
        return Err(Error::SeriesTooShort {
            needed: p + 1,
            found: n,
        });
    }
    let exog = exog.filter(|_| use_exog);
    if let Some(e) = exog {
        if e.clicks.len() != n || e.sales.len() != n {
            return Err(Error::ExogLength {
                column: "clicks",
                expected: n,
                found: e.clicks.len().min(e.sales.len()),
            });
        }
    }
    let mut rows = Vec::with_capacity(n - p);
    for t in p..n {
        let mut row: Vec<f64> = (1..=p).map(|lag| values[t - lag]).collect();
        if let Some(e) = exog {
            row.push(e.clicks[t - 1] as f64);
            row.push(e.sales[t - 1] as f64);
        }
        rows.push(row);
    }
    FeatureMatrix::new(rows, values[p..].to_vec())
}

/// A chosen split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub sse_reduction: f64,
}

fn sse(indices: &[usize], targets: &[f64]) -> f64 {
    let n = indices.len() as f64;
    let mean = indices.iter().map(|&i| targets[i]).sum::<f64>() / n;
    indices
        .iter()
        .map(|&i| {
            let d = targets[i] - mean;
            d * d
        })
        .sum()
}

fn best_split_among(
    data: &FeatureMatrix,
    indices: &[usize],
    min_samples_leaf: usize,
) -> Option<Split> {
    let n = indices.len();
    if n < 2 {
        return None;
    }
    let targets = &data.targets;
    let parent = sse(indices, targets);
    let tol = SPLIT_TOLERANCE * parent.max(1.0);
    let total: f64 = indices.iter().map(|&i| targets[i]).sum();
    let total_sq: f64 = indices.iter().map(|&i| targets[i] * targets[i]).sum();
    let leaf = min_samples_leaf.max(1);

    let mut best: Option<Split> = None;
    let mut order = indices.to_vec();
    for feature in 0..data.n_features() {
        order.sort_by(|&a, &b| data.rows[a][feature].total_cmp(&data.rows[b][feature]));
        let (mut sum_l, mut sq_l) = (0.0, 0.0);
        for pos in 0..n - 1 {
            let i = order[pos];
            sum_l += targets[i];
            sq_l += targets[i] * targets[i];
            let here = data.rows[i][feature];
            let next = data.rows[order[pos + 1]][feature];
            let n_l = pos + 1;
            let n_r = n - n_l;
            if here == next || n_l < leaf || n_r < leaf {
                continue;
            }
            let sum_r = total - sum_l;
            let sq_r = total_sq - sq_l;
            let sse_l = (sq_l - sum_l * sum_l / n_l as f64).max(0.0);
            let sse_r = (sq_r - sum_r * sum_r / n_r as f64).max(0.0);
            let reduction = parent - sse_l - sse_r;
            if reduction <= tol {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => reduction > b.sse_reduction + tol,
            };
            if better {
                best = Some(Split {
                    feature,
                    threshold: 0.5 * (here + next),
                    sse_reduction: reduction,
                });
            }
        }
    }
    best
}

/// The admissible split with the largest SSE reduction, or `None` when no
/// split with at least `min_samples_leaf` rows per side reduces the SSE.
pub fn best_split(data: &FeatureMatrix, min_samples_leaf: usize) -> Option<Split> {
    let all: Vec<usize> = (0..data.len()).collect();
    best_split_among(data, &all, min_samples_leaf)
}

/// Tree hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Number of lagged values per row.
    pub lag_order: usize,
    /// Append the previous day's clicks and sales when the series has them.
    pub use_exog: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 4,
            min_samples_leaf: 2,
            lag_order: 5,
            use_exog: true,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if self.lag_order == 0 {
            return Err(Error::InvalidConfig("lag_order must be at least 1".into()));
        }
        Ok(())
    }
}

/// A fitted regression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        prediction: f64,
        n_samples: usize,
    },
    Internal {
        feature_index: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

fn leaf(indices: &[usize], targets: &[f64]) -> TreeNode {
    let sum: f64 = indices.iter().map(|&i| targets[i]).sum();
    TreeNode::Leaf {
        prediction: sum / indices.len() as f64,
        n_samples: indices.len(),
    }
}

fn grow(data: &FeatureMatrix, indices: &[usize], depth: usize, cfg: &TreeConfig) -> TreeNode {
    let targets = &data.targets;
    let first = targets[indices[0]];
    let pure = indices.iter().all(|&i| targets[i] == first);
    if depth >= cfg.max_depth || pure {
        return leaf(indices, targets);
    }
    let Some(split) = best_split_among(data, indices, cfg.min_samples_leaf) else {
        return leaf(indices, targets);
    };
    let (left, right): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| data.rows[i][split.feature] <= split.threshold);
    TreeNode::Internal {
        feature_index: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(data, &left, depth + 1, cfg)),
        right: Box::new(grow(data, &right, depth + 1, cfg)),
    }
}

/// Greedy recursive fit. Growth stops at `max_depth`, at pure nodes, and
/// where no admissible split reduces the SSE.
pub fn tree_fit(data: &FeatureMatrix, cfg: &TreeConfig) -> Result<TreeNode> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let all: Vec<usize> = (0..data.len()).collect();
    Ok(grow(data, &all, 0, cfg))
}

impl TreeNode {
    /// Routes `x` to a leaf; the caller checks the dimension.
    fn route(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return *prediction,
                TreeNode::Internal {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature_index] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Largest feature index used by any split, if any.
    pub fn max_feature_index(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Internal {
                feature_index,
                left,
                right,
                ..
            } => [
                Some(*feature_index),
                left.max_feature_index(),
                right.max_feature_index(),
            ]
            .into_iter()
            .flatten()
            .max(),
        }
    }
}

/// A tree together with its training dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub n_features: usize,
    pub root: TreeNode,
}

impl RegressionTree {
    pub fn fit(data: &FeatureMatrix, cfg: &TreeConfig) -> Result<Self> {
        Ok(Self {
            n_features: data.n_features(),
            root: tree_fit(data, cfg)?,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        tree_predict(&self.root, x, self.n_features)
    }
}

/// Descends to a leaf (`<=` goes left) and returns its mean.
pub fn tree_predict(node: &TreeNode, x: &[f64], n_features: usize) -> Result<f64> {
    if x.len() != n_features {
        return Err(Error::DimensionMismatch {
            expected: n_features,
            found: x.len(),
        });
    }
    Ok(node.route(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn step_data() -> FeatureMatrix {
        FeatureMatrix::new(
            vec![vec![1.0], vec![2.0], vec![10.0], vec![11.0]],
            vec![0.0, 0.0, 5.0, 5.0],
        )
        .unwrap()
    }

    #[test]
    fn lag_embed_rows() {
        let m = lag_embed(&[1.0, 2.0, 3.0, 4.0], None, 2, false).unwrap();
        assert_eq!(m.rows(), &[vec![2.0, 1.0], vec![3.0, 2.0]]);
        assert_eq!(m.targets(), &[3.0, 4.0]);

        assert_eq!(
            lag_embed(&[1.0, 2.0, 3.0, 4.0], None, 3, false)
                .unwrap()
                .len(),
            1
        );
        assert!(matches!(
            lag_embed(&[1.0, 2.0, 3.0], None, 3, false),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn lag_embed_with_exog() {
        let exog = Exog {
            clicks: vec![10, 20, 30],
            sales: vec![1, 2, 3],
        };
        let m = lag_embed(&[1.0, 2.0, 3.0], Some(&exog), 1, true).unwrap();
        assert_eq!(m.rows(), &[vec![1.0, 10.0, 1.0], vec![2.0, 20.0, 2.0]]);
        let plain = lag_embed(&[1.0, 2.0, 3.0], Some(&exog), 1, false).unwrap();
        assert_eq!(plain.n_features(), 1);
        assert_eq!(
            lag_features(&[1.0, 2.0, 3.0], Some(&exog), 2).unwrap(),
            vec![3.0, 2.0, 30.0, 3.0]
        );
    }

    #[test]
    fn pure_node_has_no_split() {
        let m = FeatureMatrix::new(vec![vec![1.0], vec![2.0], vec![3.0]], vec![4.0; 3]).unwrap();
        assert_eq!(best_split(&m, 1), None);
    }

    #[test]
    fn step_split() {
        let s = best_split(&step_data(), 2).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 6.0);
        assert!((s.sse_reduction - 25.0).abs() < 1e-12);
    }

    #[test]
    fn min_samples_leaf_blocks_splits() {
        let m = FeatureMatrix::new(vec![vec![1.0], vec![2.0]], vec![0.0, 1.0]).unwrap();
        assert_eq!(best_split(&m, 2), None);
        assert!(best_split(&m, 1).is_some());
    }

    #[test]
    fn prefers_separating_feature() {
        let m = FeatureMatrix::new(
            vec![
                vec![1.0, 0.0],
                vec![3.0, 1.0],
                vec![2.0, 5.0],
                vec![4.0, 6.0],
            ],
            vec![0.0, 0.0, 9.0, 9.0],
        )
        .unwrap();
        let s = best_split(&m, 1).unwrap();
        assert_eq!(s.feature, 1);
        assert_eq!(s.threshold, 3.0);
    }

    #[test]
    fn fit_examples() {
        let flat = FeatureMatrix::new(vec![vec![1.0], vec![5.0]], vec![2.0, 2.0]).unwrap();
        let tree = tree_fit(&flat, &TreeConfig::default()).unwrap();
        assert_eq!(
            tree,
            TreeNode::Leaf {
                prediction: 2.0,
                n_samples: 2
            }
        );

        let cfg = TreeConfig {
            max_depth: 1,
            ..TreeConfig::default()
        };
        let tree = tree_fit(&step_data(), &cfg).unwrap();
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree_predict(&tree, &[1.5], 1).unwrap(), 0.0);
        assert_eq!(tree_predict(&tree, &[10.5], 1).unwrap(), 5.0);
        assert_eq!(tree_predict(&tree, &[6.0], 1).unwrap(), 0.0);

        let cfg = TreeConfig {
            max_depth: 0,
            ..TreeConfig::default()
        };
        let tree = tree_fit(&step_data(), &cfg).unwrap();
        assert_eq!(
            tree,
            TreeNode::Leaf {
                prediction: 2.5,
                n_samples: 4
            }
        );
    }

    #[test]
    fn predict_dimension_check() {
        let tree = RegressionTree::fit(&step_data(), &TreeConfig::default()).unwrap();
        assert_eq!(
            tree.predict(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 1,
                found: 2
            })
        );
    }

    #[test]
    fn matrix_validation() {
        assert_eq!(FeatureMatrix::new(vec![], vec![]), Err(Error::EmptyData));
        assert!(matches!(
            FeatureMatrix::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            FeatureMatrix::new(vec![vec![f64::NAN]], vec![0.0]),
            Err(Error::NonFinite { .. })
        ));
    }
}
