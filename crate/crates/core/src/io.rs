//! File codecs for every artifact the pipeline exchanges.
//!
//! Structured artifacts (annotations, word alignments, MT alignments,
//! token contours, stress cues, gold labels) are single JSON documents,
//! chosen for diffability and hand-editable test fixtures. Feature
//! matrices use a compact binary format with a fixed header. All parsers
//! are pure functions over byte slices and never alter numeric values
//! beyond the documented encode/decode scaling.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

use crate::annotation::AnnotationSet;
use crate::dsp::FeatureMatrix;
use crate::pde::{ModifiedContours, TokenContours};
use crate::postprocess::StressCue;
use crate::transfer::TargetCueSet;

#[derive(Debug, Error)]
pub enum IoFormatError {
    #[error("malformed container: {0}")]
    MalformedContainer(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("audio stream has no samples")]
    EmptyAudio,
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("range error: {0}")]
    RangeError(String),
    #[error("index out of bounds: {0}")]
    IndexOutOfBounds(String),
    #[error("feature file digest does not match the expected config digest")]
    DigestMismatch,
    #[error("non-finite value at row {row}, col {col}")]
    NonFinite { row: usize, col: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Mono PCM audio in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub audio_id: String,
}

impl AudioBuffer {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// One ASR word with its timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedWord {
    pub text: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// ASR word timestamps for one utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordAlignment {
    pub audio_id: String,
    pub words: Vec<AlignedWord>,
}

/// Source-to-target word links from the MT aligner. Links may be
/// many-to-many.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtAlignment {
    pub source_words: Vec<String>,
    pub target_words: Vec<String>,
    pub links: Vec<(usize, usize)>,
}

/// Gold frame labels produced by annotation aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldLabels {
    pub audio_id: String,
    pub frame_labels: Vec<u8>,
    pub gold_regions: Vec<crate::annotation::StressRegion>,
    pub kappa: Option<f64>,
}

impl GoldLabels {
    pub fn labels_as_bool(&self) -> Vec<bool> {
        self.frame_labels.iter().map(|&v| v != 0).collect()
    }
}

/// Stress-cue document; `unmapped_sources` is present on transfer output
/// and defaults to empty elsewhere, so one codec reads both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueDocument {
    pub cues: Vec<StressCue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unmapped_sources: Vec<usize>,
}

impl From<TargetCueSet> for CueDocument {
    fn from(set: TargetCueSet) -> Self {
        CueDocument { cues: set.cues, unmapped_sources: set.unmapped_sources }
    }
}

impl From<CueDocument> for TargetCueSet {
    fn from(doc: CueDocument) -> Self {
        TargetCueSet { cues: doc.cues, unmapped_sources: doc.unmapped_sources }
    }
}

// ---------------------------------------------------------------------------
// WAV
// ---------------------------------------------------------------------------

/// Read a RIFF/WAVE file: PCM 16-bit or 32-bit float, any channel count.
/// Channels are averaged to mono; 16-bit samples are scaled by 1/32768.
/// The sample rate is preserved, never resampled.
pub fn read_wav(path: &Path) -> Result<AudioBuffer, IoFormatError> {
    let reader = hound::WavReader::open(path).map_err(map_hound_error)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(IoFormatError::MalformedContainer("zero channels".into()));
    }

    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(map_hound_error)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v.clamp(-1.0, 1.0)))
            .collect::<Result<_, _>>()
            .map_err(map_hound_error)?,
        (format, bits) => {
            return Err(IoFormatError::UnsupportedEncoding(format!(
                "{format:?} {bits}-bit; only 16-bit PCM and 32-bit float are supported"
            )))
        }
    };

    if interleaved.is_empty() {
        return Err(IoFormatError::EmptyAudio);
    }

    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks(channels)
            .map(|frame| frame.iter().sum::<f32>() / channels as f32)
            .collect()
    };

    Ok(AudioBuffer {
        samples,
        sample_rate: spec.sample_rate,
        audio_id: stem_of(path),
    })
}

/// Write mono 16-bit PCM. Used to produce fixtures and round-trip audio.
pub fn write_wav(path: &Path, audio: &AudioBuffer) -> Result<(), IoFormatError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(map_hound_error)?;
    for &s in &audio.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(map_hound_error)?;
    }
    writer.finalize().map_err(map_hound_error)?;
    Ok(())
}

fn map_hound_error(e: hound::Error) -> IoFormatError {
    match e {
        hound::Error::IoError(io) => IoFormatError::Io(io),
        hound::Error::FormatError(msg) => IoFormatError::MalformedContainer(msg.to_string()),
        hound::Error::Unsupported => {
            IoFormatError::UnsupportedEncoding("unsupported wave encoding".into())
        }
        other => IoFormatError::MalformedContainer(other.to_string()),
    }
}

/// File stem up to the first '.', used as the audio id for all
/// per-utterance artifacts.
pub fn stem_of(path: &Path) -> String {
    path.file_name()
        .and_then(|n| n.to_str())
        .map(|n| n.split('.').next().unwrap_or(n).to_string())
        .unwrap_or_default()
}

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

fn parse_json<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<T, IoFormatError> {
    serde_json::from_slice(bytes).map_err(|e| IoFormatError::SchemaError(e.to_string()))
}

fn to_json_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("document serializes");
    out.push(b'\n');
    out
}

/// Parse and validate an annotation document.
pub fn parse_annotation_file(bytes: &[u8]) -> Result<AnnotationSet, IoFormatError> {
    let set: AnnotationSet = parse_json(bytes)?;
    if set.sample_rate == 0 {
        return Err(IoFormatError::SchemaError("sample_rate must be positive".into()));
    }
    if !set.duration_s.is_finite() || set.duration_s <= 0.0 {
        return Err(IoFormatError::SchemaError("duration_s must be positive".into()));
    }
    for marks in &set.annotations {
        for region in &marks.regions {
            if !region.start_s.is_finite() || !region.end_s.is_finite() {
                return Err(IoFormatError::SchemaError(format!(
                    "non-finite region in annotator {}",
                    marks.annotator_id
                )));
            }
            if region.end_s <= region.start_s || region.start_s < 0.0 {
                return Err(IoFormatError::RangeError(format!(
                    "annotator {} region [{}, {}] is inverted or negative",
                    marks.annotator_id, region.start_s, region.end_s
                )));
            }
            if region.end_s > set.duration_s {
                return Err(IoFormatError::RangeError(format!(
                    "annotator {} region ends at {} beyond duration {}",
                    marks.annotator_id, region.end_s, set.duration_s
                )));
            }
        }
    }
    Ok(set)
}

pub fn serialize_annotation_set(set: &AnnotationSet) -> Vec<u8> {
    to_json_pretty(set)
}

/// Parse and validate a word-alignment document: intervals must be
/// proper, finite, and ordered by start time.
pub fn parse_word_alignment(bytes: &[u8]) -> Result<WordAlignment, IoFormatError> {
    let alignment: WordAlignment = parse_json(bytes)?;
    let mut prev_start = f64::NEG_INFINITY;
    for (i, word) in alignment.words.iter().enumerate() {
        if !word.start_s.is_finite() || !word.end_s.is_finite() {
            return Err(IoFormatError::SchemaError(format!("word {i} has non-finite times")));
        }
        if word.start_s < 0.0 || word.end_s <= word.start_s {
            return Err(IoFormatError::RangeError(format!(
                "word {i} '{}' interval [{}, {}] invalid",
                word.text, word.start_s, word.end_s
            )));
        }
        if word.start_s < prev_start {
            return Err(IoFormatError::RangeError(format!(
                "word {i} '{}' out of order",
                word.text
            )));
        }
        prev_start = word.start_s;
    }
    Ok(alignment)
}

pub fn serialize_word_alignment(alignment: &WordAlignment) -> Vec<u8> {
    to_json_pretty(alignment)
}

/// Parse and validate an MT-alignment document; every link index must be
/// within its word list.
pub fn parse_mt_alignment(bytes: &[u8]) -> Result<MtAlignment, IoFormatError> {
    let alignment: MtAlignment = parse_json(bytes)?;
    for &(src, tgt) in &alignment.links {
        if src >= alignment.source_words.len() {
            return Err(IoFormatError::IndexOutOfBounds(format!(
                "link source {src} with only {} source words",
                alignment.source_words.len()
            )));
        }
        if tgt >= alignment.target_words.len() {
            return Err(IoFormatError::IndexOutOfBounds(format!(
                "link target {tgt} with only {} target words",
                alignment.target_words.len()
            )));
        }
    }
    Ok(alignment)
}

pub fn serialize_mt_alignment(alignment: &MtAlignment) -> Vec<u8> {
    to_json_pretty(alignment)
}

/// Parse and validate a token-contours document.
pub fn parse_token_contours(bytes: &[u8]) -> Result<TokenContours, IoFormatError> {
    let contours: TokenContours = parse_json(bytes)?;
    let n = contours.tokens.len();
    if contours.token_word_index.len() != n
        || contours.pitch.len() != n
        || contours.energy.len() != n
        || contours.duration.len() != n
    {
        return Err(IoFormatError::SchemaError(
            "tokens, token_word_index, pitch, energy, duration must have equal lengths".into(),
        ));
    }
    for (i, &d) in contours.duration.iter().enumerate() {
        if !d.is_finite() || d < 0.0 {
            return Err(IoFormatError::RangeError(format!("duration {d} at token {i}")));
        }
    }
    for w in contours.token_word_index.windows(2) {
        if w[1] < w[0] {
            return Err(IoFormatError::SchemaError(
                "token_word_index must be nondecreasing".into(),
            ));
        }
    }
    Ok(contours)
}

pub fn serialize_token_contours(contours: &TokenContours) -> Vec<u8> {
    to_json_pretty(contours)
}

/// Parse a stress-cue document (source- or target-side).
pub fn parse_stress_cues(bytes: &[u8]) -> Result<CueDocument, IoFormatError> {
    let doc: CueDocument = parse_json(bytes)?;
    for cue in &doc.cues {
        for (name, scale) in [
            ("pitch_scale", cue.pitch_scale),
            ("energy_scale", cue.energy_scale),
            ("duration_scale", cue.duration_scale),
        ] {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(IoFormatError::RangeError(format!(
                    "cue for word {} has invalid {name} {scale}",
                    cue.word_index
                )));
            }
        }
    }
    Ok(doc)
}

pub fn serialize_stress_cues(doc: &CueDocument) -> Vec<u8> {
    to_json_pretty(doc)
}

pub fn parse_gold_labels(bytes: &[u8]) -> Result<GoldLabels, IoFormatError> {
    let labels: GoldLabels = parse_json(bytes)?;
    if labels.frame_labels.iter().any(|&v| v > 1) {
        return Err(IoFormatError::SchemaError("frame labels must be 0 or 1".into()));
    }
    Ok(labels)
}

pub fn serialize_gold_labels(labels: &GoldLabels) -> Vec<u8> {
    to_json_pretty(labels)
}

pub fn parse_modified_contours(bytes: &[u8]) -> Result<ModifiedContours, IoFormatError> {
    parse_json(bytes)
}

pub fn serialize_modified_contours(contours: &ModifiedContours) -> Vec<u8> {
    to_json_pretty(contours)
}

// ---------------------------------------------------------------------------
// Binary feature files
// ---------------------------------------------------------------------------

const FEATURE_MAGIC: &[u8; 4] = b"SFEA";
const FEATURE_VERSION: u32 = 1;
const FEATURE_HEADER_LEN: usize = 4 + 4 + 4 + 4 + 32;

/// Write the binary feature format: magic "SFEA", u32 version, u32 rows,
/// u32 cols, 32-byte config digest, then rows*cols little-endian f32.
/// Non-finite values are rejected.
pub fn write_feature_matrix(matrix: &FeatureMatrix, path: &Path) -> Result<(), IoFormatError> {
    for (i, v) in matrix.data.iter().enumerate() {
        if !v.is_finite() {
            return Err(IoFormatError::NonFinite {
                row: i / matrix.n_cols.max(1),
                col: i % matrix.n_cols.max(1),
            });
        }
    }
    let mut bytes = Vec::with_capacity(FEATURE_HEADER_LEN + matrix.data.len() * 4);
    bytes.extend_from_slice(FEATURE_MAGIC);
    bytes.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(matrix.n_rows as u32).to_le_bytes());
    bytes.extend_from_slice(&(matrix.n_cols as u32).to_le_bytes());
    bytes.extend_from_slice(&matrix.config_digest);
    for v in &matrix.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

/// Read a feature file, verifying the stored config digest against
/// `expected_digest` when given.
pub fn read_feature_matrix(
    path: &Path,
    expected_digest: Option<&[u8; 32]>,
) -> Result<FeatureMatrix, IoFormatError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_feature_matrix(&bytes, expected_digest)
}

pub fn decode_feature_matrix(
    bytes: &[u8],
    expected_digest: Option<&[u8; 32]>,
) -> Result<FeatureMatrix, IoFormatError> {
    if bytes.len() < FEATURE_HEADER_LEN {
        return Err(IoFormatError::MalformedContainer("feature file too short".into()));
    }
    if &bytes[0..4] != FEATURE_MAGIC {
        return Err(IoFormatError::MalformedContainer("bad feature file magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FEATURE_VERSION {
        return Err(IoFormatError::UnsupportedEncoding(format!(
            "feature file version {version}, expected {FEATURE_VERSION}"
        )));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let mut digest = [0u8; 32];
    digest.copy_from_slice(&bytes[16..48]);
    if let Some(expected) = expected_digest {
        if &digest != expected {
            return Err(IoFormatError::DigestMismatch);
        }
    }
    let payload = &bytes[FEATURE_HEADER_LEN..];
    if payload.len() != rows * cols * 4 {
        return Err(IoFormatError::MalformedContainer(format!(
            "expected {} data bytes, found {}",
            rows * cols * 4,
            payload.len()
        )));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(FeatureMatrix::new(rows, cols, data, digest))
}
