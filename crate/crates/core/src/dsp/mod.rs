//! Per-frame acoustic feature extraction.
//!
//! All contours (F0, energy, MFCC, SDC) are computed on one shared frame
//! grid so that every feature row describes the same slice of audio. The
//! grid uses a frame length of 1024 samples and a hop of 256 at 16 kHz by
//! default.

mod fft;
mod mfcc;
mod pitch;
mod sdc;

pub use mfcc::compute_mfcc;
pub use pitch::estimate_f0;
pub use sdc::compute_sdc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::io::AudioBuffer;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("context window must be odd, got {0}")]
    WindowEven(usize),
    #[error("audio has no samples")]
    EmptyAudio,
}

/// Analysis frame parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig { frame_len: 1024, hop: 256, sample_rate: 16000 }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        if self.hop == 0 || self.hop > self.frame_len {
            return Err(DspError::InvalidConfig(format!(
                "hop {} must be in 1..={}",
                self.hop, self.frame_len
            )));
        }
        if self.sample_rate == 0 {
            return Err(DspError::InvalidConfig("sample_rate must be positive".into()));
        }
        Ok(())
    }

    /// Grid for a signal of `n_samples` samples. Audio shorter than one
    /// frame still yields a single (zero-padded) frame.
    pub fn grid_for_len(&self, n_samples: usize) -> FrameGrid {
        let n_frames = if n_samples >= self.frame_len {
            1 + (n_samples - self.frame_len) / self.hop
        } else {
            1
        };
        FrameGrid {
            frame_len: self.frame_len,
            hop: self.hop,
            sample_rate: self.sample_rate,
            n_frames,
        }
    }

    /// Grid for a stated duration in seconds.
    pub fn grid_for_duration(&self, duration_s: f64) -> FrameGrid {
        self.grid_for_len((duration_s * self.sample_rate as f64).round() as usize)
    }
}

/// The sequence of analysis windows all contours are aligned to.
///
/// Frame `t` starts at sample `hop * t`; its center is `hop * t +
/// frame_len / 2`. Interval membership is decided by the frame center and
/// half-open `[start, end)` intervals, which keeps frame-to-region and
/// frame-to-word mapping consistent across the annotation and
/// post-processing stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGrid {
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
    pub n_frames: usize,
}

impl FrameGrid {
    /// Center time of frame `t` in seconds.
    pub fn center_time(&self, t: usize) -> f64 {
        (self.hop * t + self.frame_len / 2) as f64 / self.sample_rate as f64
    }

    pub fn center_times(&self) -> Vec<f64> {
        (0..self.n_frames).map(|t| self.center_time(t)).collect()
    }

    /// Indices of all frames whose centers lie in `[start_s, end_s)`.
    /// The range may be empty for very short intervals.
    pub fn frames_in_interval(&self, start_s: f64, end_s: f64) -> std::ops::Range<usize> {
        let mut first = self.n_frames;
        let mut last = self.n_frames;
        for t in 0..self.n_frames {
            let c = self.center_time(t);
            if c >= start_s && c < end_s {
                if first == self.n_frames {
                    first = t;
                }
                last = t + 1;
            } else if c >= end_s {
                break;
            }
        }
        if first == self.n_frames {
            0..0
        } else {
            first..last
        }
    }
}

/// MFCC extraction parameters: 13 coefficients over a mel filterbank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub n_coeffs: usize,
    pub n_mels: usize,
    pub fmin: f64,
    /// Upper filterbank edge in Hz; `None` means Nyquist.
    pub fmax: Option<f64>,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig { n_coeffs: 13, n_mels: 40, fmin: 0.0, fmax: None }
    }
}

impl MfccConfig {
    pub fn validate(&self, sample_rate: u32) -> Result<(), DspError> {
        if self.n_coeffs == 0 || self.n_coeffs > self.n_mels {
            return Err(DspError::InvalidConfig(format!(
                "n_coeffs {} must be in 1..={}",
                self.n_coeffs, self.n_mels
            )));
        }
        let nyquist = sample_rate as f64 / 2.0;
        let fmax = self.fmax.unwrap_or(nyquist);
        if !(self.fmin >= 0.0 && self.fmin < fmax && fmax <= nyquist) {
            return Err(DspError::InvalidConfig(format!(
                "mel band [{}, {fmax}] invalid for sample rate {sample_rate}",
                self.fmin
            )));
        }
        Ok(())
    }
}

/// Shifted delta coefficient parameters (d, p, k).
///
/// Output width is `n_base * k`; the defaults (d=1, p=5, k=4 over 13
/// MFCCs) give 52 columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdcConfig {
    pub d: usize,
    pub p: usize,
    pub k: usize,
    pub n_base: usize,
}

impl Default for SdcConfig {
    fn default() -> Self {
        SdcConfig { d: 1, p: 5, k: 4, n_base: 13 }
    }
}

impl SdcConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        if self.d == 0 || self.p == 0 || self.k == 0 || self.n_base == 0 {
            return Err(DspError::InvalidConfig("sdc d, p, k, n_base must all be >= 1".into()));
        }
        Ok(())
    }

    pub fn output_cols(&self) -> usize {
        self.n_base * self.k
    }
}

/// F0 search band and voicing decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchConfig {
    pub f0_min: f64,
    pub f0_max: f64,
    pub voicing_threshold: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        PitchConfig { f0_min: 60.0, f0_max: 400.0, voicing_threshold: 0.3 }
    }
}

impl PitchConfig {
    pub fn validate(&self, sample_rate: u32) -> Result<(), DspError> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.f0_min > 0.0 && self.f0_min < self.f0_max && self.f0_max < nyquist) {
            return Err(DspError::InvalidConfig(format!(
                "f0 band [{}, {}] invalid for sample rate {sample_rate}",
                self.f0_min, self.f0_max
            )));
        }
        if !(self.voicing_threshold > 0.0 && self.voicing_threshold < 1.0) {
            return Err(DspError::InvalidConfig("voicing_threshold must be in (0,1)".into()));
        }
        Ok(())
    }
}

/// Which contours enter the feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    /// F0 and energy only (2 columns before stacking).
    #[serde(rename = "f0e")]
    F0Energy,
    /// F0, energy, 13 MFCCs and the SDC block (67 columns before stacking).
    #[serde(rename = "full")]
    Full,
}

impl FeatureSet {
    pub fn parse(s: &str) -> Option<FeatureSet> {
        match s {
            "f0e" => Some(FeatureSet::F0Energy),
            "full" => Some(FeatureSet::Full),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureSet::F0Energy => "f0e",
            FeatureSet::Full => "full",
        }
    }
}

/// Complete feature-extraction configuration. Its digest identifies the
/// exact feature space and travels with every feature file and model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub frame: FrameConfig,
    pub pitch: PitchConfig,
    pub mfcc: MfccConfig,
    pub sdc: SdcConfig,
    pub feature_set: FeatureSet,
    pub window: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            frame: FrameConfig::default(),
            pitch: PitchConfig::default(),
            mfcc: MfccConfig::default(),
            sdc: SdcConfig::default(),
            feature_set: FeatureSet::Full,
            window: 7,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        self.frame.validate()?;
        self.pitch.validate(self.frame.sample_rate)?;
        if self.feature_set == FeatureSet::Full {
            self.mfcc.validate(self.frame.sample_rate)?;
            self.sdc.validate()?;
            if self.sdc.n_base != self.mfcc.n_coeffs {
                return Err(DspError::InvalidConfig(format!(
                    "sdc n_base {} must equal mfcc n_coeffs {}",
                    self.sdc.n_base, self.mfcc.n_coeffs
                )));
            }
        }
        if self.window.is_multiple_of(2) {
            return Err(DspError::WindowEven(self.window));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of this config.
    pub fn digest(&self) -> [u8; 32] {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hasher.finalize().into()
    }

    pub fn digest_hex(&self) -> String {
        hex_of(&self.digest())
    }

    /// Column count before context stacking.
    pub fn base_cols(&self) -> usize {
        match self.feature_set {
            FeatureSet::F0Energy => 2,
            FeatureSet::Full => 2 + self.mfcc.n_coeffs + self.sdc.output_cols(),
        }
    }
}

pub fn hex_of(digest: &[u8; 32]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Row-major float matrix plus the digest of the config that produced it.
/// This is the payload persisted by the binary feature file codec.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f32>,
    pub config_digest: [u8; 32],
}

impl FeatureMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f32>, config_digest: [u8; 32]) -> Self {
        assert_eq!(data.len(), n_rows * n_cols, "data length must be rows * cols");
        FeatureMatrix { n_rows, n_cols, data, config_digest }
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn digest_hex(&self) -> String {
        hex_of(&self.config_digest)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// One named group of adjacent columns in the pre-stacking layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnGroup {
    pub name: String,
    pub width: usize,
}

/// Ordered column groups plus the context window they get stacked with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub groups: Vec<ColumnGroup>,
    pub window: usize,
}

impl FeatureLayout {
    pub fn base_cols(&self) -> usize {
        self.groups.iter().map(|g| g.width).sum()
    }

    pub fn total_cols(&self) -> usize {
        self.base_cols() * self.window
    }
}

/// Feature matrix plus the provenance needed to interpret it.
#[derive(Debug, Clone)]
pub struct FeatureExtraction {
    pub matrix: FeatureMatrix,
    pub layout: FeatureLayout,
    pub grid: FrameGrid,
}

impl FeatureExtraction {
    pub fn frame_times(&self) -> Vec<f64> {
        self.grid.center_times()
    }
}

/// Slice audio into overlapping analysis frames.
///
/// Signals shorter than one frame produce a single zero-padded frame. No
/// window function is applied here; the MFCC stage windows internally.
pub fn frame_signal(audio: &AudioBuffer, cfg: &FrameConfig) -> Result<Vec<Vec<f64>>, DspError> {
    cfg.validate()?;
    if audio.samples.is_empty() {
        return Err(DspError::EmptyAudio);
    }
    let grid = cfg.grid_for_len(audio.samples.len());
    let mut frames = Vec::with_capacity(grid.n_frames);
    for t in 0..grid.n_frames {
        let start = t * cfg.hop;
        let mut frame = vec![0.0f64; cfg.frame_len];
        for (i, slot) in frame.iter_mut().enumerate() {
            if let Some(&s) = audio.samples.get(start + i) {
                *slot = s as f64;
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Root-mean-square energy of each frame.
pub fn frame_energy(frames: &[Vec<f64>]) -> Vec<f64> {
    frames
        .iter()
        .map(|f| {
            if f.is_empty() {
                0.0
            } else {
                (f.iter().map(|x| x * x).sum::<f64>() / f.len() as f64).sqrt()
            }
        })
        .collect()
}

/// Per-column standardization statistics (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvnStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl MvnStats {
    /// Standardize rows in place. Zero-variance columns map to zero.
    pub fn apply(&self, rows: &mut [Vec<f64>]) {
        for row in rows.iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if self.std[j] > 0.0 { (*v - self.mean[j]) / self.std[j] } else { 0.0 };
            }
        }
    }
}

/// Standardize each column to zero mean, unit variance. Returns the stats
/// so the identical transform can be replayed at inference time.
pub fn mean_variance_normalize(rows: &mut [Vec<f64>]) -> MvnStats {
    let n_cols = rows.first().map_or(0, |r| r.len());
    let n = rows.len() as f64;
    let mut mean = vec![0.0; n_cols];
    let mut std = vec![0.0; n_cols];
    if rows.is_empty() {
        return MvnStats { mean, std };
    }
    for row in rows.iter() {
        for (j, v) in row.iter().enumerate() {
            mean[j] += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    for row in rows.iter() {
        for (j, v) in row.iter().enumerate() {
            let d = v - mean[j];
            std[j] += d * d;
        }
    }
    for s in std.iter_mut() {
        *s = (*s / n).sqrt();
    }
    let stats = MvnStats { mean, std };
    stats.apply(rows);
    stats
}

/// Concatenate each row with its `(window-1)/2` neighbors on either side,
/// replicating edge rows. Width is multiplied by `window`.
pub fn stack_context(rows: &[Vec<f64>], window: usize) -> Result<Vec<Vec<f64>>, DspError> {
    if window.is_multiple_of(2) || window == 0 {
        return Err(DspError::WindowEven(window));
    }
    if window == 1 {
        return Ok(rows.to_vec());
    }
    let half = (window - 1) / 2;
    let n = rows.len() as isize;
    let mut out = Vec::with_capacity(rows.len());
    for t in 0..n {
        let mut stacked = Vec::with_capacity(rows[t as usize].len() * window);
        for off in -(half as isize)..=(half as isize) {
            let idx = (t + off).clamp(0, n - 1) as usize;
            stacked.extend_from_slice(&rows[idx]);
        }
        out.push(stacked);
    }
    Ok(out)
}

/// Full extraction: contours on a shared grid, per-utterance MVN, then
/// context stacking. The result carries the config digest.
pub fn assemble_features(
    audio: &AudioBuffer,
    cfg: &FeatureConfig,
) -> Result<FeatureExtraction, DspError> {
    cfg.validate()?;
    let frames = frame_signal(audio, &cfg.frame)?;
    let grid = cfg.frame.grid_for_len(audio.samples.len());
    let f0 = estimate_f0(audio, &cfg.frame, &cfg.pitch)?;
    let energy = frame_energy(&frames);
    debug_assert_eq!(f0.len(), grid.n_frames);
    debug_assert_eq!(energy.len(), grid.n_frames);

    let mut groups = vec![
        ColumnGroup { name: "f0".into(), width: 1 },
        ColumnGroup { name: "energy".into(), width: 1 },
    ];
    let mut base: Vec<Vec<f64>> = (0..grid.n_frames).map(|t| vec![f0[t], energy[t]]).collect();

    if cfg.feature_set == FeatureSet::Full {
        let mfcc = compute_mfcc(&frames, &cfg.frame, &cfg.mfcc);
        let sdc = compute_sdc(&mfcc, &cfg.sdc);
        for (t, row) in base.iter_mut().enumerate() {
            row.extend_from_slice(&mfcc[t]);
            row.extend_from_slice(&sdc[t]);
        }
        groups.push(ColumnGroup { name: "mfcc".into(), width: cfg.mfcc.n_coeffs });
        groups.push(ColumnGroup { name: "sdc".into(), width: cfg.sdc.output_cols() });
    }

    mean_variance_normalize(&mut base);
    let stacked = stack_context(&base, cfg.window)?;

    let n_rows = stacked.len();
    let n_cols = stacked.first().map_or(0, |r| r.len());
    let mut data = Vec::with_capacity(n_rows * n_cols);
    for row in &stacked {
        data.extend(row.iter().map(|&v| v as f32));
    }
    Ok(FeatureExtraction {
        matrix: FeatureMatrix::new(n_rows, n_cols, data, cfg.digest()),
        layout: FeatureLayout { groups, window: cfg.window },
        grid,
    })
}
