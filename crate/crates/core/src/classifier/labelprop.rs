//! Graph label propagation over an RBF-weighted kNN graph.
//!
//! Training builds the neighbor graph among training points and iterates
//! label spreading with labeled points clamped, until the distributions
//! move less than `tol` or `max_iter` is reached. New points are scored
//! inductively by the RBF-weighted vote of their k nearest training
//! points' final distributions.

use serde::{Deserialize, Serialize};

use super::{squared_distance, ClassifierError, LpaParams, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct LpaModel {
    train_points: Matrix,
    /// Final probability of the stressed class per training point.
    distributions: Vec<f64>,
    gamma: f64,
    n_neighbors: usize,
}

/// k nearest rows of `x` for row `i` (self excluded), ties broken on the
/// lower index.
fn knn_of_row(x: &Matrix, i: usize, k: usize) -> Vec<(usize, f64)> {
    let mut dists: Vec<(usize, f64)> = (0..x.rows)
        .filter(|&j| j != i)
        .map(|j| (j, squared_distance(x.row(i), x.row(j))))
        .collect();
    dists.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    dists.truncate(k);
    dists
}

pub(crate) fn train_lpa(
    x: &Matrix,
    y: &[bool],
    params: &LpaParams,
) -> Result<LpaModel, ClassifierError> {
    if x.rows < params.n_neighbors + 1 {
        return Err(ClassifierError::Underdetermined {
            needed: params.n_neighbors + 1,
            got: x.rows,
        });
    }
    let gamma = params.gamma.resolve(x);
    let n = x.rows;

    // Directed kNN edges with RBF weights, then symmetrized by union.
    let mut weights: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, d2) in knn_of_row(x, i, params.n_neighbors) {
            let w = (-gamma * d2).exp();
            weights[i].push((j, w));
            weights[j].push((i, w));
        }
    }
    for adjacency in weights.iter_mut() {
        adjacency.sort_by_key(|a| a.0);
        adjacency.dedup_by_key(|e| e.0);
    }

    // Label spreading with every labeled point clamped. All training
    // points are labeled here, so this converges immediately; the loop
    // stays for partially labeled graphs.
    let clamp: Vec<f64> = y.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    let mut dist = clamp.clone();
    for _ in 0..params.max_iter {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            let mut total = 0.0;
            for &(j, w) in &weights[i] {
                acc += w * dist[j];
                total += w;
            }
            next[i] = if total > 0.0 { acc / total } else { dist[i] };
        }
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = clamp[i];
        }
        let delta = dist
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        dist = next;
        if delta < params.tol {
            break;
        }
    }

    Ok(LpaModel {
        train_points: x.clone(),
        distributions: dist,
        gamma,
        n_neighbors: params.n_neighbors,
    })
}

impl LpaModel {
    pub(crate) fn scores(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows)
            .map(|r| {
                let row = x.row(r);
                let mut dists: Vec<(usize, f64)> = (0..self.train_points.rows)
                    .map(|j| (j, squared_distance(row, self.train_points.row(j))))
                    .collect();
                dists.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                dists.truncate(self.n_neighbors);

                let mut acc = 0.0;
                let mut total = 0.0;
                for &(j, d2) in &dists {
                    let w = (-self.gamma * d2).exp();
                    acc += w * self.distributions[j];
                    total += w;
                }
                if total > 0.0 {
                    acc / total
                } else {
                    // All neighbors are astronomically far; fall back to an
                    // unweighted vote.
                    dists.iter().map(|&(j, _)| self.distributions[j]).sum::<f64>()
                        / dists.len().max(1) as f64
                }
            })
            .collect()
    }
}
