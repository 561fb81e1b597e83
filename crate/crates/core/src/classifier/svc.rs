//! RBF-kernel support vector classifier trained with a simplified SMO
//! dual solver (Platt 1998 as condensed in the CS229 notes). The second
//! working-set index is drawn from the seeded generator, so training is
//! reproducible.

use serde::{Deserialize, Serialize};

use super::{squared_distance, Matrix, SvcParams};
use crate::rng::SplitMix64;

/// Hard cap on full passes over the data, so degenerate problems
/// terminate.
const MAX_EPOCHS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct SvcModel {
    support_vectors: Matrix,
    /// alpha_i * y_i for each support vector.
    coefficients: Vec<f64>,
    bias: f64,
    gamma: f64,
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

pub(crate) fn train_svc(
    x: &Matrix,
    y: &[bool],
    params: &SvcParams,
    rng: &mut SplitMix64,
) -> SvcModel {
    let n = x.rows;
    let gamma = params.gamma.resolve(x);
    let c = params.penalty_c;
    let tol = params.tol;
    let signs: Vec<f64> = y.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();

    // Precompute the Gram matrix when it fits comfortably; fall back to
    // on-the-fly kernels for large n.
    let gram: Option<Vec<f64>> = if n <= 4096 {
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = rbf(gamma, x.row(i), x.row(j));
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Some(g)
    } else {
        None
    };
    let kernel = |i: usize, j: usize| -> f64 {
        match &gram {
            Some(g) => g[i * n + j],
            None => rbf(gamma, x.row(i), x.row(j)),
        }
    };

    let mut alphas = vec![0.0f64; n];
    let mut b = 0.0f64;

    let decision = |alphas: &[f64], b: f64, i: usize, kernel: &dyn Fn(usize, usize) -> f64| {
        let mut sum = b;
        for (j, &a) in alphas.iter().enumerate() {
            if a > 0.0 {
                sum += a * signs[j] * kernel(j, i);
            }
        }
        sum
    };

    let mut quiet_passes = 0;
    let mut epochs = 0;
    while quiet_passes < params.max_passes && epochs < MAX_EPOCHS {
        let mut changed = 0;
        for i in 0..n {
            let e_i = decision(&alphas, b, i, &kernel) - signs[i];
            let violates = (signs[i] * e_i < -tol && alphas[i] < c)
                || (signs[i] * e_i > tol && alphas[i] > 0.0);
            if !violates {
                continue;
            }
            let j = {
                let mut j = rng.gen_index(n);
                while j == i {
                    j = rng.gen_index(n);
                }
                j
            };
            let e_j = decision(&alphas, b, j, &kernel) - signs[j];

            let (alpha_i_old, alpha_j_old) = (alphas[i], alphas[j]);
            let (lo, hi) = if signs[i] != signs[j] {
                ((alpha_j_old - alpha_i_old).max(0.0), (c + alpha_j_old - alpha_i_old).min(c))
            } else {
                ((alpha_i_old + alpha_j_old - c).max(0.0), (alpha_i_old + alpha_j_old).min(c))
            };
            if lo >= hi {
                continue;
            }

            let eta = 2.0 * kernel(i, j) - kernel(i, i) - kernel(j, j);
            if eta >= 0.0 {
                continue;
            }

            let mut alpha_j = alpha_j_old - signs[j] * (e_i - e_j) / eta;
            alpha_j = alpha_j.clamp(lo, hi);
            if (alpha_j - alpha_j_old).abs() < 1e-5 {
                continue;
            }
            let alpha_i = alpha_i_old + signs[i] * signs[j] * (alpha_j_old - alpha_j);

            let b1 = b
                - e_i
                - signs[i] * (alpha_i - alpha_i_old) * kernel(i, i)
                - signs[j] * (alpha_j - alpha_j_old) * kernel(i, j);
            let b2 = b
                - e_j
                - signs[i] * (alpha_i - alpha_i_old) * kernel(i, j)
                - signs[j] * (alpha_j - alpha_j_old) * kernel(j, j);
            b = if 0.0 < alpha_i && alpha_i < c {
                b1
            } else if 0.0 < alpha_j && alpha_j < c {
                b2
            } else {
                (b1 + b2) / 2.0
            };

            alphas[i] = alpha_i;
            alphas[j] = alpha_j;
            changed += 1;
        }
        if changed == 0 {
            quiet_passes += 1;
        } else {
            quiet_passes = 0;
        }
        epochs += 1;
    }

    // Keep only the support vectors.
    let mut support_vectors = Matrix::zeros(0, x.cols);
    support_vectors.data.clear();
    let mut coefficients = Vec::new();
    for i in 0..n {
        if alphas[i] > 1e-8 {
            support_vectors.push_row(x.row(i));
            coefficients.push(alphas[i] * signs[i]);
        }
    }
    SvcModel { support_vectors, coefficients, bias: b, gamma }
}

impl SvcModel {
    fn margin(&self, row: &[f64]) -> f64 {
        let mut sum = self.bias;
        for (i, coeff) in self.coefficients.iter().enumerate() {
            sum += coeff * rbf(self.gamma, self.support_vectors.row(i), row);
        }
        sum
    }

    /// Logistic of the raw margin, so 0.5 corresponds to the decision
    /// boundary.
    pub(crate) fn scores(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows).map(|r| 1.0 / (1.0 + (-self.margin(x.row(r))).exp())).collect()
    }
}
