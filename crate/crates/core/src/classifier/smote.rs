//! SMOTE minority-class oversampling.
//!
//! Synthetic minority samples are convex combinations `a + u * (b - a)`
//! of a minority point and one of its k nearest minority neighbors
//! (Euclidean), with u uniform in [0, 1). Originals are preserved
//! verbatim and synthetics are appended, so row order is stable.

use serde::{Deserialize, Serialize};

use super::{squared_distance, ClassifierError, Matrix};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Desired minority/majority count ratio after oversampling.
    pub target_ratio: f64,
    pub rng_seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig { k_neighbors: 5, target_ratio: 1.0, rng_seed: 17 }
    }
}

impl SmoteConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.k_neighbors == 0 {
            return Err(ClassifierError::InvalidConfig("smote k_neighbors must be >= 1".into()));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(ClassifierError::InvalidConfig(format!(
                "smote target_ratio {} must be in (0, 1]",
                self.target_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SmoteOutput {
    pub features: Matrix,
    pub labels: Vec<bool>,
    pub synthesized: usize,
    /// Set when the minority class was too small to interpolate (fewer
    /// than 2 samples); the data is returned unchanged.
    pub pass_through: bool,
}

pub fn smote_oversample(
    x: &Matrix,
    y: &[bool],
    cfg: &SmoteConfig,
) -> Result<SmoteOutput, ClassifierError> {
    cfg.validate()?;
    if x.rows != y.len() {
        return Err(ClassifierError::LengthMismatch { pred: x.rows, truth: y.len() });
    }
    if x.rows == 0 {
        return Err(ClassifierError::Empty);
    }
    let positives: Vec<usize> = (0..x.rows).filter(|&i| y[i]).collect();
    let negatives: Vec<usize> = (0..x.rows).filter(|&i| !y[i]).collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(ClassifierError::SingleClass);
    }

    let (minority, majority_count, minority_label) = if positives.len() <= negatives.len() {
        (positives, negatives.len(), true)
    } else {
        (negatives, positives.len(), false)
    };

    let unchanged = || SmoteOutput {
        features: x.clone(),
        labels: y.to_vec(),
        synthesized: 0,
        pass_through: false,
    };

    let target = (majority_count as f64 * cfg.target_ratio).round() as usize;
    if minority.len() >= target {
        return Ok(unchanged());
    }
    if minority.len() < 2 {
        let mut out = unchanged();
        out.pass_through = true;
        return Ok(out);
    }

    let n_needed = target - minority.len();
    let k = cfg.k_neighbors.min(minority.len() - 1);

    // k nearest minority neighbors of each minority point, self excluded.
    // Ties break on the lower row index for determinism.
    let neighbors: Vec<Vec<usize>> = minority
        .iter()
        .map(|&a| {
            let mut dists: Vec<(f64, usize)> = minority
                .iter()
                .filter(|&&b| b != a)
                .map(|&b| (squared_distance(x.row(a), x.row(b)), b))
                .collect();
            dists.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
            dists.truncate(k);
            dists.into_iter().map(|(_, b)| b).collect()
        })
        .collect();

    let mut rng = SplitMix64::new(cfg.rng_seed);
    let mut features = x.clone();
    let mut labels = y.to_vec();
    for _ in 0..n_needed {
        let pick = rng.gen_index(minority.len());
        let a = minority[pick];
        let b = neighbors[pick][rng.gen_index(k)];
        let u = rng.next_f64();
        let row: Vec<f64> = x
            .row(a)
            .iter()
            .zip(x.row(b).iter())
            .map(|(&va, &vb)| va + u * (vb - va))
            .collect();
        features.push_row(&row);
        labels.push(minority_label);
    }

    Ok(SmoteOutput { features, labels, synthesized: n_needed, pass_through: false })
}
