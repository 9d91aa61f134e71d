//! Bagged CART regression trees with a variance-reduction split
//! criterion. Prediction is the mean over trees; per-feature importance
//! is the accumulated squared-error reduction, averaged over trees.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by std inherent methods in test builds
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rngx::{self, SeedRng};

#[derive(Debug, Clone, PartialEq)]
pub struct ForestHyper {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Candidate features per split; None picks ceil(sqrt(d)).
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestHyper {
    fn default() -> Self {
        ForestHyper {
            n_trees: 100,
            max_depth: 8,
            min_leaf: 5,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf { value: f64 },
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if row[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub n_features: u32,
    /// Mean impurity decrease per schema coordinate.
    pub importance: Vec<f64>,
}

impl Forest {
    pub fn predict(&self, row: &[f64]) -> f64 {
        debug_assert!(!self.trees.is_empty());
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    hyper: &'a ForestHyper,
    n_candidates: usize,
    nodes: Vec<TreeNode>,
    importance: &'a mut [f64],
    feature_scratch: Vec<usize>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl<'a> TreeBuilder<'a> {
    /// Best variance-reducing split over a random feature subset, or None
    /// if no candidate passes the min_leaf constraint with positive gain.
    fn best_split(&mut self, idx: &[usize], rng: &mut SeedRng) -> Option<BestSplit> {
        let n = idx.len();
        let sum: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let sum2: f64 = idx.iter().map(|&i| self.y[i] * self.y[i]).sum();
        let sse_parent = sum2 - sum * sum / n as f64;
        if sse_parent <= 1e-12 {
            return None;
        }

        // Partial Fisher-Yates draw of candidate features.
        let d = self.x.cols();
        for (i, f) in self.feature_scratch.iter_mut().enumerate() {
            *f = i;
        }
        for i in 0..self.n_candidates {
            let j = rng.gen_range(i..d);
            self.feature_scratch.swap(i, j);
        }

        let mut best: Option<BestSplit> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
        for c in 0..self.n_candidates {
            let feature = self.feature_scratch[c];
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.x.get(i, feature), self.y[i])));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_sum = 0.0;
            let mut left_sum2 = 0.0;
            for s in 1..n {
                let (xv, yv) = pairs[s - 1];
                left_sum += yv;
                left_sum2 += yv * yv;
                if s < self.hyper.min_leaf || n - s < self.hyper.min_leaf {
                    continue;
                }
                let next = pairs[s].0;
                if xv == next {
                    continue;
                }
                let right_sum = sum - left_sum;
                let right_sum2 = sum2 - left_sum2;
                let sse = (left_sum2 - left_sum * left_sum / s as f64)
                    + (right_sum2 - right_sum * right_sum / (n - s) as f64);
                let gain = sse_parent - sse;
                if gain > best.as_ref().map_or(1e-12, |b| b.gain + 1e-12) {
                    let mid = xv + (next - xv) / 2.0;
                    let threshold = if mid >= next { xv } else { mid };
                    best = Some(BestSplit { gain, feature, threshold });
                }
            }
        }
        best
    }

    fn build(&mut self, idx: &mut Vec<usize>, depth: usize, rng: &mut SeedRng) -> u32 {
        let n = idx.len();
        let value = idx.iter().map(|&i| self.y[i]).sum::<f64>() / n as f64;
        let node_id = self.nodes.len() as u32;
        self.nodes.push(TreeNode::Leaf { value });

        if depth >= self.hyper.max_depth || n < 2 * self.hyper.min_leaf {
            return node_id;
        }
        let Some(split) = self.best_split(idx, rng) else {
            return node_id;
        };

        self.importance[split.feature] += split.gain;
        let (mut left_idx, mut right_idx): (Vec<usize>, Vec<usize>) = idx
            .drain(..)
            .partition(|&i| self.x.get(i, split.feature) <= split.threshold);
        let left = self.build(&mut left_idx, depth + 1, rng);
        let right = self.build(&mut right_idx, depth + 1, rng);
        self.nodes[node_id as usize] = TreeNode::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            left,
            right,
        };
        node_id
    }
}

pub fn fit_forest(x: &Matrix, y: &[f64], hyper: &ForestHyper) -> Result<Forest> {
    if x.rows() == 0 || y.is_empty() {
        return Err(Error::Fit("empty training set".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::Fit("row/target count mismatch".into()));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite values in training set".into()));
    }
    if hyper.n_trees == 0 || hyper.min_leaf == 0 {
        return Err(Error::Parameter("n_trees and min_leaf must be positive".into()));
    }

    let n = x.rows();
    let d = x.cols();
    let n_candidates = hyper
        .features_per_split
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d);

    let mut importance = vec![0.0; d];
    let mut trees = Vec::with_capacity(hyper.n_trees);
    for t in 0..hyper.n_trees {
        let mut rng = rngx::rng_from_seed(rngx::splitmix64(
            hyper.seed ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        ));
        let mut idx: Vec<usize> = if hyper.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut builder = TreeBuilder {
            x,
            y,
            hyper,
            n_candidates,
            nodes: Vec::new(),
            importance: &mut importance,
            feature_scratch: vec![0; d],
        };
        builder.build(&mut idx, 0, &mut rng);
        trees.push(Tree { nodes: builder.nodes });
    }
    for imp in importance.iter_mut() {
        *imp /= hyper.n_trees as f64;
    }
    Ok(Forest { trees, n_features: d as u32, importance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngx;
    use rand::Rng;

    fn single_tree_hyper() -> ForestHyper {
        ForestHyper {
            n_trees: 1,
            bootstrap: false,
            features_per_split: Some(1),
            min_leaf: 1,
            ..ForestHyper::default()
        }
    }

    #[test]
    fn depth_zero_stump_predicts_the_mean() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let y = [1.0, 3.0, 5.0, 7.0];
        let hyper = ForestHyper { max_depth: 0, ..single_tree_hyper() };
        let forest = fit_forest(&x, &y, &hyper).unwrap();
        for v in [-10.0, 0.0, 2.5, 100.0] {
            assert_eq!(forest.predict(&[v]), 4.0);
        }
    }

    // Brute-force oracle: enumerate every candidate midpoint and compute
    // both sides' squared error directly.
    fn brute_force_split(xs: &[f64], ys: &[f64], min_leaf: usize) -> (f64, f64) {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
        let sse = |idx: &[usize]| {
            let m = idx.iter().map(|&i| ys[i]).sum::<f64>() / idx.len() as f64;
            idx.iter().map(|&i| (ys[i] - m) * (ys[i] - m)).sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0.0);
        for s in min_leaf..=(xs.len() - min_leaf) {
            let a = xs[order[s - 1]];
            let b = xs[order[s]];
            if a == b {
                continue;
            }
            let total = sse(&order[..s]) + sse(&order[s..]);
            if total < best.0 - 1e-12 {
                best = (total, (a + b) / 2.0);
            }
        }
        best
    }

    #[test]
    fn split_point_matches_brute_force_on_step_data() {
        let mut rng = rngx::rng_from_seed(8);
        let xs: Vec<f64> = (0..80).map(|_| rng.gen::<f64>() * 10.0).collect();
        let ys: Vec<f64> =
            xs.iter().map(|&v| if v < 6.3 { 1.0 } else { 9.0 }).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&v| vec![v]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let hyper = ForestHyper { max_depth: 1, min_leaf: 5, ..single_tree_hyper() };
        let forest = fit_forest(&x, &ys, &hyper).unwrap();
        let TreeNode::Split { threshold, .. } = forest.trees[0].nodes[0] else {
            panic!("expected a split at the root");
        };
        let (_, oracle_threshold) = brute_force_split(&xs, &ys, 5);
        assert!(
            (threshold - oracle_threshold).abs() < 1e-9,
            "{threshold} vs oracle {oracle_threshold}"
        );
    }

    #[test]
    fn constant_target_stays_constant() {
        let mut rng = rngx::rng_from_seed(9);
        let rows: Vec<Vec<f64>> =
            (0..50).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let y = vec![4.25; 50];
        let x = Matrix::from_rows(&rows).unwrap();
        let forest = fit_forest(&x, &y, &ForestHyper { n_trees: 10, ..ForestHyper::default() })
            .unwrap();
        for i in 0..10 {
            assert_eq!(forest.predict(x.row(i)), 4.25);
        }
    }

    #[test]
    fn prediction_is_the_mean_over_trees() {
        let mut rng = rngx::rng_from_seed(10);
        let rows: Vec<Vec<f64>> =
            (0..120).map(|_| (0..4).map(|_| rng.gen::<f64>() * 5.0).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 2.0 - r[2] + 0.3 * r[3]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let forest =
            fit_forest(&x, &y, &ForestHyper { n_trees: 7, seed: 3, ..ForestHyper::default() })
                .unwrap();
        let probe = [1.0, 2.0, 3.0, 4.0];
        let by_tree: f64 =
            forest.trees.iter().map(|t| t.predict(&probe)).sum::<f64>() / 7.0;
        assert_eq!(forest.predict(&probe), by_tree);
    }

    #[test]
    fn fit_is_deterministic_for_a_seed() {
        let mut rng = rngx::rng_from_seed(11);
        let rows: Vec<Vec<f64>> =
            (0..60).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[1] * 3.0).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let hyper = ForestHyper { n_trees: 5, seed: 77, ..ForestHyper::default() };
        let a = fit_forest(&x, &y, &hyper).unwrap();
        let b = fit_forest(&x, &y, &hyper).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_training_set_is_a_fit_error() {
        let x = Matrix::zeros(0, 3);
        assert!(matches!(
            fit_forest(&x, &[], &ForestHyper::default()),
            Err(Error::Fit(_))
        ));
    }
}
