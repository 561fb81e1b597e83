//! Random forest: bootstrap sampling, Gini splits, sqrt(d) feature
//! subsampling per node. Each tree draws from a forked stream of the
//! training seed, so the whole ensemble is reproducible.

use serde::{Deserialize, Serialize};

use super::{Matrix, RfcParams};
use crate::rng::SplitMix64;

const MIN_SAMPLES_SPLIT: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
enum Node {
    Leaf {
        prob: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn prob_for(&self, row: &[f64]) -> f64 {
        match self {
            Node::Leaf { prob } => *prob,
            Node::Split { feature, threshold, left, right } => {
                if row[*feature] <= *threshold {
                    left.prob_for(row)
                } else {
                    right.prob_for(row)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ForestModel {
    trees: Vec<Node>,
}

pub(crate) fn train_forest(
    x: &Matrix,
    y: &[bool],
    params: &RfcParams,
    rng: &mut SplitMix64,
) -> ForestModel {
    let n_sub_features = (x.cols as f64).sqrt().ceil() as usize;
    let trees = (0..params.n_trees)
        .map(|t| {
            let mut tree_rng = rng.fork(t as u64);
            let sample: Vec<usize> = (0..x.rows).map(|_| tree_rng.gen_index(x.rows)).collect();
            grow(x, y, &sample, n_sub_features, params.max_depth, 0, &mut tree_rng)
        })
        .collect();
    ForestModel { trees }
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

fn grow(
    x: &Matrix,
    y: &[bool],
    sample: &[usize],
    n_sub_features: usize,
    max_depth: Option<usize>,
    depth: usize,
    rng: &mut SplitMix64,
) -> Node {
    let total = sample.len();
    let pos = sample.iter().filter(|&&i| y[i]).count();
    let leaf = || Node::Leaf { prob: pos as f64 / total.max(1) as f64 };

    if total < MIN_SAMPLES_SPLIT || pos == 0 || pos == total {
        return leaf();
    }
    if let Some(limit) = max_depth {
        if depth >= limit {
            return leaf();
        }
    }

    // Random distinct feature subset via partial Fisher-Yates.
    let mut features: Vec<usize> = (0..x.cols).collect();
    for i in 0..n_sub_features.min(x.cols) {
        let j = i + rng.gen_index(x.cols - i);
        features.swap(i, j);
    }
    features.truncate(n_sub_features.min(x.cols));

    let parent_gini = gini(pos, total);
    let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)

    let mut order: Vec<usize> = sample.to_vec();
    for &feature in &features {
        order.sort_by(|&a, &b| x.row(a)[feature].total_cmp(&x.row(b)[feature]).then(a.cmp(&b)));
        let mut left_pos = 0usize;
        for split_at in 1..total {
            if y[order[split_at - 1]] {
                left_pos += 1;
            }
            let lo = x.row(order[split_at - 1])[feature];
            let hi = x.row(order[split_at])[feature];
            if lo == hi {
                continue;
            }
            let left_total = split_at;
            let right_total = total - split_at;
            let right_pos = pos - left_pos;
            let weighted = (left_total as f64 * gini(left_pos, left_total)
                + right_total as f64 * gini(right_pos, right_total))
                / total as f64;
            let gain = parent_gini - weighted;
            let threshold = lo + (hi - lo) / 2.0;
            let better = match best {
                None => gain > 1e-12,
                Some((best_gain, best_feature, _)) => {
                    gain > best_gain + 1e-12
                        || (gain > best_gain - 1e-12 && feature < best_feature)
                }
            };
            if better {
                best = Some((gain, feature, threshold));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        return leaf();
    };
    let left: Vec<usize> =
        sample.iter().copied().filter(|&i| x.row(i)[feature] <= threshold).collect();
    let right: Vec<usize> =
        sample.iter().copied().filter(|&i| x.row(i)[feature] > threshold).collect();
    if left.is_empty() || right.is_empty() {
        return leaf();
    }

    Node::Split {
        feature,
        threshold,
        left: Box::new(grow(x, y, &left, n_sub_features, max_depth, depth + 1, rng)),
        right: Box::new(grow(x, y, &right, n_sub_features, max_depth, depth + 1, rng)),
    }
}

impl ForestModel {
    /// Fraction of trees voting stressed.
    pub(crate) fn scores(&self, x: &Matrix) -> Vec<f64> {
        let n_trees = self.trees.len() as f64;
        (0..x.rows)
            .map(|r| {
                let votes = self
                    .trees
                    .iter()
                    .filter(|tree| tree.prob_for(x.row(r)) >= 0.5)
                    .count();
                votes as f64 / n_trees
            })
            .collect()
    }
}
