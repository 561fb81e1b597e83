//! Frame-level stress classifiers.
//!
//! Three families share one training/prediction surface: an RBF-kernel
//! support vector classifier, a random forest, and graph-based label
//! propagation. Training normalizes the feature matrix (storing the
//! stats), optionally rebalances it with SMOTE, and is deterministic
//! under a fixed seed. A trained model is immutable and rejects feature
//! matrices whose config digest differs from the one it was trained on.

mod forest;
mod labelprop;
mod smote;
mod svc;

pub use smote::{smote_oversample, SmoteConfig, SmoteOutput};

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::dsp::{hex_of, FeatureMatrix, MvnStats};
use crate::rng::SplitMix64;

use forest::ForestModel;
use labelprop::LpaModel;
use svc::SvcModel;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("features contain non-finite values")]
    NonFinite,
    #[error("label propagation needs at least {needed} samples, got {got}")]
    Underdetermined { needed: usize, got: usize },
    #[error("feature layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("length mismatch: {pred} predictions vs {truth} labels")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("empty input")]
    Empty,
    #[error("model format mismatch: {0}")]
    VersionMismatch(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Dense row-major f64 matrix used by the trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged rows");
            data.extend(row);
        }
        Matrix { rows: n_rows, cols: n_cols, data }
    }

    pub fn from_features(features: &FeatureMatrix) -> Self {
        Matrix {
            rows: features.n_rows,
            cols: features.n_cols,
            data: features.data.iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// RBF bandwidth rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    /// 1 / (n_features * var(X)), the common "scale" heuristic.
    Scale,
    Fixed(f64),
}

impl GammaRule {
    pub(crate) fn resolve(&self, x: &Matrix) -> f64 {
        match *self {
            GammaRule::Fixed(g) => g,
            GammaRule::Scale => {
                let n = x.data.len() as f64;
                if n == 0.0 || x.cols == 0 {
                    return 1.0;
                }
                let mean = x.data.iter().sum::<f64>() / n;
                let var = x.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                if var > 0.0 {
                    1.0 / (x.cols as f64 * var)
                } else {
                    1.0 / x.cols as f64
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Svc,
    Rfc,
    Lpa,
}

impl ModelFamily {
    pub fn parse(s: &str) -> Option<ModelFamily> {
        match s {
            "svc" => Some(ModelFamily::Svc),
            "rfc" => Some(ModelFamily::Rfc),
            "lpa" => Some(ModelFamily::Lpa),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelFamily::Svc => "svc",
            ModelFamily::Rfc => "rfc",
            ModelFamily::Lpa => "lpa",
        }
    }
}

/// RBF support vector classifier settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvcParams {
    pub penalty_c: f64,
    pub gamma: GammaRule,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SvcParams {
    fn default() -> Self {
        SvcParams { penalty_c: 0.8, gamma: GammaRule::Scale, tol: 1e-3, max_passes: 5 }
    }
}

/// Random forest settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfcParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
}

impl Default for RfcParams {
    fn default() -> Self {
        RfcParams { n_trees: 100, max_depth: None }
    }
}

/// Label propagation settings: an RBF-weighted kNN graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpaParams {
    pub n_neighbors: usize,
    pub gamma: GammaRule,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LpaParams {
    fn default() -> Self {
        LpaParams { n_neighbors: 7, gamma: GammaRule::Scale, max_iter: 1000, tol: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub family: ModelFamily,
    pub svc: SvcParams,
    pub rfc: RfcParams,
    pub lpa: LpaParams,
    pub rng_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            family: ModelFamily::Lpa,
            svc: SvcParams::default(),
            rfc: RfcParams::default(),
            lpa: LpaParams::default(),
            rng_seed: 17,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.svc.penalty_c <= 0.0 || self.svc.tol <= 0.0 || self.svc.max_passes == 0 {
            return Err(ClassifierError::InvalidConfig("svc parameters must be positive".into()));
        }
        if self.rfc.n_trees == 0 {
            return Err(ClassifierError::InvalidConfig("rfc needs at least one tree".into()));
        }
        if self.lpa.n_neighbors == 0 || self.lpa.max_iter == 0 || self.lpa.tol <= 0.0 {
            return Err(ClassifierError::InvalidConfig("lpa parameters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ModelParams {
    Svc(SvcModel),
    Rfc(ForestModel),
    Lpa(LpaModel),
}

mod hex_digest {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(digest: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::hex_of(digest))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let text = String::deserialize(d)?;
        if text.len() != 64 {
            return Err(serde::de::Error::custom("digest must be 64 hex chars"));
        }
        let mut out = [0u8; 32];
        for (i, chunk) in text.as_bytes().chunks(2).enumerate() {
            let hex = std::str::from_utf8(chunk).map_err(serde::de::Error::custom)?;
            out[i] = u8::from_str_radix(hex, 16).map_err(serde::de::Error::custom)?;
        }
        Ok(out)
    }
}

/// A trained, immutable stress classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressModel {
    pub format_version: u32,
    pub family: ModelFamily,
    #[serde(with = "hex_digest")]
    pub feature_digest: [u8; 32],
    pub norm_stats: MvnStats,
    params: ModelParams,
}

const MODEL_FORMAT_VERSION: u32 = 1;

/// Train a stress classifier.
///
/// The feature matrix is standardized (stats are stored in the model and
/// replayed at prediction time) and, when a SMOTE config is given, the
/// minority class is oversampled in the normalized space before family
/// training. Deterministic for a fixed `cfg.rng_seed`.
pub fn train(
    features: &FeatureMatrix,
    labels: &[bool],
    cfg: &ModelConfig,
    smote: Option<&SmoteConfig>,
) -> Result<StressModel, ClassifierError> {
    cfg.validate()?;
    if features.n_rows == 0 || labels.is_empty() {
        return Err(ClassifierError::Empty);
    }
    if features.n_rows != labels.len() {
        return Err(ClassifierError::LengthMismatch {
            pred: features.n_rows,
            truth: labels.len(),
        });
    }
    if !features.is_finite() {
        return Err(ClassifierError::NonFinite);
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(ClassifierError::SingleClass);
    }

    let mut x = Matrix::from_features(features);
    let norm_stats = normalize_matrix(&mut x);

    let (x, y) = match smote {
        Some(smote_cfg) => {
            let out = smote_oversample(&x, labels, smote_cfg)?;
            (out.features, out.labels)
        }
        None => (x, labels.to_vec()),
    };

    let mut rng = SplitMix64::new(cfg.rng_seed);
    let params = match cfg.family {
        ModelFamily::Svc => ModelParams::Svc(svc::train_svc(&x, &y, &cfg.svc, &mut rng)),
        ModelFamily::Rfc => ModelParams::Rfc(forest::train_forest(&x, &y, &cfg.rfc, &mut rng)),
        ModelFamily::Lpa => ModelParams::Lpa(labelprop::train_lpa(&x, &y, &cfg.lpa)?),
    };

    Ok(StressModel {
        format_version: MODEL_FORMAT_VERSION,
        family: cfg.family,
        feature_digest: features.config_digest,
        norm_stats,
        params,
    })
}

/// Predict stress labels and scores in [0, 1] for every row.
///
/// Scores: logistic of the margin for SVC, tree-vote fraction for RFC,
/// propagated class probability for LPA. Labels are `score >= 0.5`.
pub fn predict(
    model: &StressModel,
    features: &FeatureMatrix,
) -> Result<(Vec<bool>, Vec<f64>), ClassifierError> {
    if features.config_digest != model.feature_digest {
        return Err(ClassifierError::LayoutMismatch(format!(
            "feature digest {} does not match model digest {}",
            features.digest_hex(),
            hex_of(&model.feature_digest)
        )));
    }
    if features.n_rows == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if features.n_cols != model.norm_stats.mean.len() {
        return Err(ClassifierError::LayoutMismatch(format!(
            "{} columns, model expects {}",
            features.n_cols,
            model.norm_stats.mean.len()
        )));
    }
    if !features.is_finite() {
        return Err(ClassifierError::NonFinite);
    }

    let mut x = Matrix::from_features(features);
    apply_stats(&model.norm_stats, &mut x);

    let scores = match &model.params {
        ModelParams::Svc(m) => m.scores(&x),
        ModelParams::Rfc(m) => m.scores(&x),
        ModelParams::Lpa(m) => m.scores(&x),
    };
    let labels = scores.iter().map(|&s| s >= 0.5).collect();
    Ok((labels, scores))
}

fn normalize_matrix(x: &mut Matrix) -> MvnStats {
    let n = x.rows as f64;
    let mut mean = vec![0.0; x.cols];
    let mut std = vec![0.0; x.cols];
    for r in 0..x.rows {
        for (j, v) in x.row(r).iter().enumerate() {
            mean[j] += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    for r in 0..x.rows {
        for (j, v) in x.row(r).iter().enumerate() {
            let d = v - mean[j];
            std[j] += d * d;
        }
    }
    for s in std.iter_mut() {
        *s = (*s / n).sqrt();
    }
    let stats = MvnStats { mean, std };
    apply_stats(&stats, x);
    stats
}

fn apply_stats(stats: &MvnStats, x: &mut Matrix) {
    for r in 0..x.rows {
        let row = &mut x.data[r * x.cols..(r + 1) * x.cols];
        for (j, v) in row.iter_mut().enumerate() {
            *v = if stats.std[j] > 0.0 { (*v - stats.mean[j]) / stats.std[j] } else { 0.0 };
        }
    }
}

/// Accuracy and stressed-class F1 with raw confusion counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

/// Standard accuracy and F1 over the stressed class. F1 is 0 when there
/// are no true positives but errors exist, and 1 for a perfect
/// prediction with no positives at all.
pub fn evaluate(predicted: &[bool], truth: &[bool]) -> Result<Metrics, ClassifierError> {
    if predicted.len() != truth.len() {
        return Err(ClassifierError::LengthMismatch { pred: predicted.len(), truth: truth.len() });
    }
    if predicted.is_empty() {
        return Err(ClassifierError::Empty);
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fneg = 0usize;
    for (&p, &t) in predicted.iter().zip(truth.iter()) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fneg += 1,
        }
    }
    let accuracy = (tp + tn) as f64 / predicted.len() as f64;
    let denom = 2 * tp + fp + fneg;
    let f1 = if denom == 0 { 1.0 } else { 2.0 * tp as f64 / denom as f64 };
    Ok(Metrics { accuracy, f1, true_pos: tp, false_pos: fp, true_neg: tn, false_neg: fneg })
}

pub fn model_to_bytes(model: &StressModel) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(model).expect("model serializes");
    bytes.push(b'\n');
    bytes
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<StressModel, ClassifierError> {
    let value: serde_json::Value = serde_json::from_slice(bytes)
        .map_err(|e| ClassifierError::VersionMismatch(format!("unreadable model: {e}")))?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
        Some(v) => {
            return Err(ClassifierError::VersionMismatch(format!(
                "model format version {v}, expected {MODEL_FORMAT_VERSION}"
            )))
        }
        None => {
            return Err(ClassifierError::VersionMismatch("missing format_version".into()))
        }
    }
    serde_json::from_value(value)
        .map_err(|e| ClassifierError::VersionMismatch(format!("bad model document: {e}")))
}

pub fn save_model(model: &StressModel, path: &Path) -> Result<(), ClassifierError> {
    std::fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<StressModel, ClassifierError> {
    let bytes = std::fs::read(path)?;
    model_from_bytes(&bytes)
}

#[cfg(test)]
pub(crate) mod test_data {
    use super::Matrix;
    use crate::rng::SplitMix64;

    /// Two Gaussian blobs (sigma 1) with centers `separation` apart along
    /// every axis pair, `n_per_class` points each, labels false/true.
    pub fn blobs(
        n_per_class: usize,
        dims: usize,
        separation: f64,
        seed: u64,
    ) -> (Matrix, Vec<bool>) {
        let mut rng = SplitMix64::new(seed);
        let mut rows = Vec::with_capacity(2 * n_per_class);
        let mut labels = Vec::with_capacity(2 * n_per_class);
        for class in 0..2 {
            let offset = if class == 0 { 0.0 } else { separation };
            for _ in 0..n_per_class {
                rows.push((0..dims).map(|_| offset + rng.next_gaussian()).collect());
                labels.push(class == 1);
            }
        }
        (Matrix::from_rows(rows), labels)
    }
}
