//! Python bindings for the stress transfer toolkit.
//!
//! Exposes the main types and operations: audio loading, feature
//! extraction, annotation aggregation, SMOTE, classifier training and
//! prediction, word-level post-processing, cue transfer and the PDE
//! modifier.

use numpy::{IntoPyArray, PyArray1, PyArray2, PyReadonlyArray1, PyReadonlyArray2};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ::stresskit_core::annotation;
use ::stresskit_core::classifier::{
    self, Matrix, ModelConfig, ModelFamily, SmoteConfig, StressModel,
};
use ::stresskit_core::dsp::{
    self, FeatureConfig, FeatureMatrix, FeatureSet, FrameConfig, PitchConfig,
};
use ::stresskit_core::io::{self, AlignedWord, AudioBuffer, MtAlignment, WordAlignment};
use ::stresskit_core::pde;
use ::stresskit_core::postprocess::{self, ScaleBounds, StressCue};
use ::stresskit_core::transfer;

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn frame_config(frame_len: usize, hop: usize, sample_rate: u32) -> FrameConfig {
    FrameConfig { frame_len, hop, sample_rate }
}

fn parse_feature_set(name: &str) -> PyResult<FeatureSet> {
    FeatureSet::parse(name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown feature set '{name}'")))
}

/// Mono audio samples plus their sample rate.
#[pyclass(name = "Audio")]
#[derive(Clone)]
struct PyAudio {
    inner: AudioBuffer,
}

#[pymethods]
impl PyAudio {
    #[new]
    #[pyo3(signature = (samples, sample_rate, audio_id = "audio".to_string()))]
    fn new(samples: PyReadonlyArray1<f64>, sample_rate: u32, audio_id: String) -> PyResult<Self> {
        let samples: Vec<f32> =
            samples.as_array().iter().map(|&v| v as f32).collect();
        Ok(PyAudio { inner: AudioBuffer { samples, sample_rate, audio_id } })
    }

    /// Read a 16-bit PCM or 32-bit float wav file (mixed down to mono).
    #[staticmethod]
    fn read_wav(path: &str) -> PyResult<Self> {
        io::read_wav(std::path::Path::new(path))
            .map(|inner| PyAudio { inner })
            .map_err(value_error)
    }

    fn samples<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        let v: Vec<f64> = self.inner.samples.iter().map(|&s| s as f64).collect();
        v.into_pyarray_bound(py)
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.inner.sample_rate
    }

    #[getter]
    fn audio_id(&self) -> String {
        self.inner.audio_id.clone()
    }

    #[getter]
    fn duration_s(&self) -> f64 {
        self.inner.duration_s()
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }
}

/// A per-frame feature matrix stamped with its config digest.
#[pyclass(name = "Features")]
#[derive(Clone)]
struct PyFeatures {
    inner: FeatureMatrix,
}

#[pymethods]
impl PyFeatures {
    /// Wrap an arbitrary 2-D array (for custom feature spaces).
    #[staticmethod]
    #[pyo3(signature = (array, digest_hex = None))]
    fn from_array(array: PyReadonlyArray2<f64>, digest_hex: Option<&str>) -> PyResult<Self> {
        let view = array.as_array();
        let (n_rows, n_cols) = view.dim();
        let data: Vec<f32> = view.iter().map(|&v| v as f32).collect();
        let digest = match digest_hex {
            Some(text) => parse_digest(text)?,
            None => [0u8; 32],
        };
        Ok(PyFeatures { inner: FeatureMatrix::new(n_rows, n_cols, data, digest) })
    }

    fn array<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyArray2<f64>>> {
        let rows: Vec<Vec<f64>> = (0..self.inner.n_rows)
            .map(|r| self.inner.row(r).iter().map(|&v| v as f64).collect())
            .collect();
        PyArray2::from_vec2_bound(py, &rows).map_err(value_error)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.n_rows, self.inner.n_cols)
    }

    #[getter]
    fn digest_hex(&self) -> String {
        self.inner.digest_hex()
    }
}

fn parse_digest(text: &str) -> PyResult<[u8; 32]> {
    if text.len() != 64 {
        return Err(PyValueError::new_err("digest must be 64 hex chars"));
    }
    let mut out = [0u8; 32];
    for (i, chunk) in text.as_bytes().chunks(2).enumerate() {
        let hex = std::str::from_utf8(chunk).map_err(value_error)?;
        out[i] = u8::from_str_radix(hex, 16).map_err(value_error)?;
    }
    Ok(out)
}

/// A trained frame-level stress classifier.
#[pyclass(name = "Model")]
struct PyModel {
    inner: StressModel,
}

#[pymethods]
impl PyModel {
    #[getter]
    fn family(&self) -> String {
        self.inner.family.as_str().to_string()
    }

    #[getter]
    fn feature_digest_hex(&self) -> String {
        dsp::hex_of(&self.inner.feature_digest)
    }

    /// Predict stress labels and scores in [0, 1] per row.
    fn predict<'py>(
        &self,
        py: Python<'py>,
        features: &PyFeatures,
    ) -> PyResult<(Vec<bool>, Bound<'py, PyArray1<f64>>)> {
        let (labels, scores) =
            classifier::predict(&self.inner, &features.inner).map_err(value_error)?;
        Ok((labels, scores.into_pyarray_bound(py)))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        classifier::save_model(&self.inner, std::path::Path::new(path)).map_err(value_error)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        classifier::load_model(std::path::Path::new(path))
            .map(|inner| PyModel { inner })
            .map_err(value_error)
    }
}

/// A stressed word with its pitch/energy/duration scaling factors.
#[pyclass(name = "Cue")]
#[derive(Clone)]
struct PyCue {
    inner: StressCue,
}

#[pymethods]
impl PyCue {
    #[new]
    #[pyo3(signature = (word_index, word, pitch_scale, energy_scale, duration_scale = 1.0))]
    fn new(
        word_index: usize,
        word: String,
        pitch_scale: f64,
        energy_scale: f64,
        duration_scale: f64,
    ) -> Self {
        PyCue {
            inner: StressCue { word_index, word, pitch_scale, energy_scale, duration_scale },
        }
    }

    #[getter]
    fn word_index(&self) -> usize {
        self.inner.word_index
    }

    #[getter]
    fn word(&self) -> String {
        self.inner.word.clone()
    }

    #[getter]
    fn pitch_scale(&self) -> f64 {
        self.inner.pitch_scale
    }

    #[getter]
    fn energy_scale(&self) -> f64 {
        self.inner.energy_scale
    }

    #[getter]
    fn duration_scale(&self) -> f64 {
        self.inner.duration_scale
    }

    fn __repr__(&self) -> String {
        format!(
            "Cue(word_index={}, word='{}', pitch_scale={}, energy_scale={}, duration_scale={})",
            self.inner.word_index,
            self.inner.word,
            self.inner.pitch_scale,
            self.inner.energy_scale,
            self.inner.duration_scale
        )
    }
}

/// Extract the stacked per-frame feature matrix for one utterance.
#[pyfunction]
#[pyo3(signature = (
    audio,
    feature_set = "full",
    window = 7,
    frame_len = 1024,
    hop = 256,
))]
fn extract_features(
    audio: &PyAudio,
    feature_set: &str,
    window: usize,
    frame_len: usize,
    hop: usize,
) -> PyResult<PyFeatures> {
    let cfg = FeatureConfig {
        frame: frame_config(frame_len, hop, audio.inner.sample_rate),
        feature_set: parse_feature_set(feature_set)?,
        window,
        ..FeatureConfig::default()
    };
    dsp::assemble_features(&audio.inner, &cfg)
        .map(|extraction| PyFeatures { inner: extraction.matrix })
        .map_err(value_error)
}

/// Per-frame F0 in Hz (0.0 on unvoiced frames).
#[pyfunction]
#[pyo3(signature = (audio, f0_min = 60.0, f0_max = 400.0, voicing_threshold = 0.3,
                    frame_len = 1024, hop = 256))]
fn estimate_f0<'py>(
    py: Python<'py>,
    audio: &PyAudio,
    f0_min: f64,
    f0_max: f64,
    voicing_threshold: f64,
    frame_len: usize,
    hop: usize,
) -> PyResult<Bound<'py, PyArray1<f64>>> {
    let contour = dsp::estimate_f0(
        &audio.inner,
        &frame_config(frame_len, hop, audio.inner.sample_rate),
        &PitchConfig { f0_min, f0_max, voicing_threshold },
    )
    .map_err(value_error)?;
    Ok(contour.into_pyarray_bound(py))
}

/// Per-frame RMS energy.
#[pyfunction]
#[pyo3(signature = (audio, frame_len = 1024, hop = 256))]
fn energy_contour<'py>(
    py: Python<'py>,
    audio: &PyAudio,
    frame_len: usize,
    hop: usize,
) -> PyResult<Bound<'py, PyArray1<f64>>> {
    let frames = dsp::frame_signal(
        &audio.inner,
        &frame_config(frame_len, hop, audio.inner.sample_rate),
    )
    .map_err(value_error)?;
    Ok(dsp::frame_energy(&frames).into_pyarray_bound(py))
}

/// Fleiss kappa over an items x categories matrix of rating counts.
#[pyfunction]
fn fleiss_kappa(counts: Vec<Vec<usize>>) -> PyResult<f64> {
    annotation::fleiss_kappa(&counts).map_err(value_error)
}

/// Aggregate an annotation document (JSON text) into gold frame labels.
/// Returns (frame_labels, gold_regions, kappa).
#[pyfunction]
#[pyo3(signature = (annotation_json, min_annotators = 3, frame_len = 1024, hop = 256))]
fn aggregate_annotations(
    annotation_json: &str,
    min_annotators: usize,
    frame_len: usize,
    hop: usize,
) -> PyResult<(Vec<bool>, Vec<(f64, f64)>, Option<f64>)> {
    let set = io::parse_annotation_file(annotation_json.as_bytes()).map_err(value_error)?;
    let grid =
        frame_config(frame_len, hop, set.sample_rate).grid_for_duration(set.duration_s);
    let agg =
        annotation::aggregate_regions(&set, &grid, min_annotators).map_err(value_error)?;
    Ok((
        agg.frame_labels,
        agg.gold_regions.iter().map(|r| (r.start_s, r.end_s)).collect(),
        agg.kappa,
    ))
}

/// SMOTE oversampling of the minority class; returns the augmented
/// matrix and labels.
#[pyfunction]
#[pyo3(signature = (features, labels, k_neighbors = 5, target_ratio = 1.0, seed = 17))]
fn smote<'py>(
    py: Python<'py>,
    features: PyReadonlyArray2<f64>,
    labels: Vec<bool>,
    k_neighbors: usize,
    target_ratio: f64,
    seed: u64,
) -> PyResult<(Bound<'py, PyArray2<f64>>, Vec<bool>)> {
    let view = features.as_array();
    let (rows, cols) = view.dim();
    let x = Matrix { rows, cols, data: view.iter().copied().collect() };
    let cfg = SmoteConfig { k_neighbors, target_ratio, rng_seed: seed };
    let out = classifier::smote_oversample(&x, &labels, &cfg).map_err(value_error)?;
    let rows: Vec<Vec<f64>> =
        (0..out.features.rows).map(|r| out.features.row(r).to_vec()).collect();
    Ok((PyArray2::from_vec2_bound(py, &rows).map_err(value_error)?, out.labels))
}

/// Train a stress classifier (family: "svc", "rfc" or "lpa").
#[pyfunction]
#[pyo3(signature = (features, labels, family = "lpa", seed = 17, smote = false))]
fn train_model(
    features: &PyFeatures,
    labels: Vec<bool>,
    family: &str,
    seed: u64,
    smote: bool,
) -> PyResult<PyModel> {
    let family = ModelFamily::parse(family)
        .ok_or_else(|| PyValueError::new_err(format!("unknown model family '{family}'")))?;
    let cfg = ModelConfig { family, rng_seed: seed, ..ModelConfig::default() };
    let smote_cfg = SmoteConfig { rng_seed: seed, ..SmoteConfig::default() };
    classifier::train(&features.inner, &labels, &cfg, smote.then_some(&smote_cfg))
        .map(|inner| PyModel { inner })
        .map_err(value_error)
}

/// Accuracy and stressed-class F1 of predictions against labels.
#[pyfunction]
fn evaluate(predicted: Vec<bool>, truth: Vec<bool>) -> PyResult<(f64, f64)> {
    let metrics = classifier::evaluate(&predicted, &truth).map_err(value_error)?;
    Ok((metrics.accuracy, metrics.f1))
}

/// Majority-vote word decisions from frame predictions.
/// Words are (text, start_s, end_s); returns (index, text, stressed,
/// stressed_frame_fraction) per word.
#[pyfunction]
#[pyo3(signature = (frame_preds, words, n_samples, frame_len = 1024, hop = 256,
                    sample_rate = 16000))]
fn word_stress(
    frame_preds: Vec<bool>,
    words: Vec<(String, f64, f64)>,
    n_samples: usize,
    frame_len: usize,
    hop: usize,
    sample_rate: u32,
) -> PyResult<Vec<(usize, String, bool, f64)>> {
    let grid = frame_config(frame_len, hop, sample_rate).grid_for_len(n_samples);
    let alignment = WordAlignment {
        audio_id: String::new(),
        words: words
            .into_iter()
            .map(|(text, start_s, end_s)| AlignedWord { text, start_s, end_s })
            .collect(),
    };
    let decisions = postprocess::word_level_stress(&frame_preds, &alignment, &grid)
        .map_err(value_error)?;
    Ok(decisions
        .into_iter()
        .map(|d| (d.word_index, d.word, d.stressed, d.stressed_frame_fraction))
        .collect())
}

/// Pitch/energy scaling factors of the frame range [start, end) against
/// the rest of the utterance; returns the clamped
/// (pitch_scale, energy_scale, duration_scale).
#[pyfunction]
#[pyo3(signature = (f0, energy, start, end, clamp_lo = 0.5, clamp_hi = 2.0,
                    duration_scale = 1.0))]
fn scaling_factors(
    f0: PyReadonlyArray1<f64>,
    energy: PyReadonlyArray1<f64>,
    start: usize,
    end: usize,
    clamp_lo: f64,
    clamp_hi: f64,
    duration_scale: f64,
) -> PyResult<(f64, f64, f64)> {
    postprocess::compute_scaling_factors(
        f0.as_slice().map_err(value_error)?,
        energy.as_slice().map_err(value_error)?,
        start..end,
        &ScaleBounds { lo: clamp_lo, hi: clamp_hi },
        duration_scale,
    )
    .map_err(value_error)
}

/// Map source-word cues to target words through MT alignment links.
/// Returns (target cues, unmapped source indices).
#[pyfunction]
fn map_cues(
    cues: Vec<PyCue>,
    source_words: Vec<String>,
    target_words: Vec<String>,
    links: Vec<(usize, usize)>,
) -> PyResult<(Vec<PyCue>, Vec<usize>)> {
    let alignment = MtAlignment { source_words, target_words, links };
    let source: Vec<StressCue> = cues.into_iter().map(|c| c.inner).collect();
    let out = transfer::map_cues(&source, &alignment).map_err(value_error)?;
    Ok((
        out.cues.into_iter().map(|inner| PyCue { inner }).collect(),
        out.unmapped_sources,
    ))
}

/// PDE modifier: scale the pitch/energy/duration of every token whose
/// word is cued, re-round durations to whole frames and return
/// (pitch, energy, durations).
#[pyfunction]
fn apply_cues<'py>(
    py: Python<'py>,
    tokens: Vec<String>,
    token_word_index: Vec<usize>,
    pitch: Vec<f64>,
    energy: Vec<f64>,
    duration: Vec<f64>,
    cues: Vec<PyCue>,
) -> PyResult<(Bound<'py, PyArray1<f64>>, Bound<'py, PyArray1<f64>>, Vec<i64>)> {
    let contours = TokenContoursArgs { tokens, token_word_index, pitch, energy, duration }
        .into_contours()?;
    let cue_set = transfer::TargetCueSet {
        cues: cues.into_iter().map(|c| c.inner).collect(),
        unmapped_sources: vec![],
    };
    let out = pde::apply_cues(&contours, &cue_set).map_err(value_error)?;
    Ok((
        out.pitch.into_pyarray_bound(py),
        out.energy.into_pyarray_bound(py),
        out.duration,
    ))
}

struct TokenContoursArgs {
    tokens: Vec<String>,
    token_word_index: Vec<usize>,
    pitch: Vec<f64>,
    energy: Vec<f64>,
    duration: Vec<f64>,
}

impl TokenContoursArgs {
    fn into_contours(self) -> PyResult<pde::TokenContours> {
        let n = self.tokens.len();
        if self.token_word_index.len() != n
            || self.pitch.len() != n
            || self.energy.len() != n
            || self.duration.len() != n
        {
            return Err(PyValueError::new_err("token sequences must have equal lengths"));
        }
        Ok(pde::TokenContours {
            tokens: self.tokens,
            token_word_index: self.token_word_index,
            pitch: self.pitch,
            energy: self.energy,
            duration: self.duration,
        })
    }
}

/// Repeat each value durations[i] times (token-to-frame upsampling).
#[pyfunction]
fn upsample_by_duration<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    durations: Vec<i64>,
) -> PyResult<Bound<'py, PyArray1<f64>>> {
    pde::upsample_by_duration(&values, &durations)
        .map(|v| v.into_pyarray_bound(py))
        .map_err(value_error)
}

#[pymodule]
fn stresskit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAudio>()?;
    m.add_class::<PyFeatures>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyCue>()?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_f0, m)?)?;
    m.add_function(wrap_pyfunction!(energy_contour, m)?)?;
    m.add_function(wrap_pyfunction!(fleiss_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_annotations, m)?)?;
    m.add_function(wrap_pyfunction!(smote, m)?)?;
    m.add_function(wrap_pyfunction!(train_model, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(word_stress, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_factors, m)?)?;
    m.add_function(wrap_pyfunction!(map_cues, m)?)?;
    m.add_function(wrap_pyfunction!(apply_cues, m)?)?;
    m.add_function(wrap_pyfunction!(upsample_by_duration, m)?)?;
    Ok(())
}
