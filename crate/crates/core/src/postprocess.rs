//! Word-level post-processing of frame predictions.
//!
//! Frame-level stress predictions are lifted to word decisions with the
//! ASR word timestamps: a word is stressed iff a strict majority of the
//! frames whose centers fall inside it are predicted stressed. Stressed
//! words then get pitch/energy scaling factors comparing the word's
//! contour statistics against the rest of the utterance.

use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

use crate::dsp::FrameGrid;
use crate::io::{AlignedWord, WordAlignment};

#[derive(Debug, Error, PartialEq)]
pub enum PostprocessError {
    #[error("prediction length {got} does not match frame grid ({expected} frames)")]
    GridMismatch { got: usize, expected: usize },
    #[error("word frame range is empty")]
    EmptyRange,
    #[error("word lists differ: {0}")]
    WordListMismatch(String),
    #[error("invalid scale bounds: lo {lo}, hi {hi}")]
    InvalidBounds { lo: f64, hi: f64 },
}

/// Lower/upper clamp applied to every emitted scaling factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleBounds {
    pub lo: f64,
    pub hi: f64,
}

impl Default for ScaleBounds {
    fn default() -> Self {
        ScaleBounds { lo: 0.5, hi: 2.0 }
    }
}

impl ScaleBounds {
    pub fn validate(&self) -> Result<(), PostprocessError> {
        if !(self.lo > 0.0 && self.lo <= self.hi) {
            return Err(PostprocessError::InvalidBounds { lo: self.lo, hi: self.hi });
        }
        Ok(())
    }

    pub fn clamp(&self, s: f64) -> f64 {
        s.clamp(self.lo, self.hi)
    }
}

/// Per-word majority-vote outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordStressDecision {
    pub word_index: usize,
    pub word: String,
    pub stressed: bool,
    pub stressed_frame_fraction: f64,
}

/// A stressed word plus the factors used to re-introduce its stress on
/// the synthesis side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressCue {
    pub word_index: usize,
    pub word: String,
    pub pitch_scale: f64,
    pub energy_scale: f64,
    pub duration_scale: f64,
}

/// Indices of all frames whose centers lie in the word interval
/// [start_s, end_s). May be empty for words shorter than one hop.
pub fn frames_for_word(word: &AlignedWord, grid: &FrameGrid) -> Range<usize> {
    grid.frames_in_interval(word.start_s, word.end_s)
}

/// Majority-vote word decisions from frame predictions.
///
/// Words with an empty frame range are unstressed with fraction 0. A
/// 50/50 tie resolves to unstressed (strict majority).
pub fn word_level_stress(
    frame_preds: &[bool],
    words: &WordAlignment,
    grid: &FrameGrid,
) -> Result<Vec<WordStressDecision>, PostprocessError> {
    if frame_preds.len() != grid.n_frames {
        return Err(PostprocessError::GridMismatch {
            got: frame_preds.len(),
            expected: grid.n_frames,
        });
    }
    Ok(words
        .words
        .iter()
        .enumerate()
        .map(|(i, word)| {
            let range = frames_for_word(word, grid);
            let total = range.len();
            let stressed_frames = range.clone().filter(|&t| frame_preds[t]).count();
            let fraction =
                if total > 0 { stressed_frames as f64 / total as f64 } else { 0.0 };
            WordStressDecision {
                word_index: i,
                word: word.text.clone(),
                stressed: fraction > 0.5,
                stressed_frame_fraction: fraction,
            }
        })
        .collect())
}

/// Pitch and energy scaling factors for one word range.
///
/// pitch_scale is the mean voiced F0 inside the range over the mean
/// voiced F0 outside it (F0 = 0 frames are excluded); energy_scale is
/// the same ratio over all frames. A ratio with an empty or zero
/// denominator (or an empty numerator set) falls back to 1.0. All
/// factors, including the configured duration scale, are clamped.
pub fn compute_scaling_factors(
    f0: &[f64],
    energy: &[f64],
    word_range: Range<usize>,
    bounds: &ScaleBounds,
    duration_scale: f64,
) -> Result<(f64, f64, f64), PostprocessError> {
    bounds.validate()?;
    if word_range.is_empty() {
        return Err(PostprocessError::EmptyRange);
    }
    let in_range = |t: usize| word_range.contains(&t);

    let mean_where = |values: &[f64], inside: bool, keep: &dyn Fn(f64) -> bool| -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (t, &v) in values.iter().enumerate() {
            if in_range(t) == inside && keep(v) {
                sum += v;
                count += 1;
            }
        }
        if count > 0 {
            Some(sum / count as f64)
        } else {
            None
        }
    };

    let voiced = |v: f64| v > 0.0;
    let all = |_: f64| true;

    let ratio = |num: Option<f64>, den: Option<f64>| -> f64 {
        match (num, den) {
            (Some(n), Some(d)) if d > 0.0 => n / d,
            _ => 1.0,
        }
    };

    let pitch_scale = ratio(mean_where(f0, true, &voiced), mean_where(f0, false, &voiced));
    let energy_scale = ratio(mean_where(energy, true, &all), mean_where(energy, false, &all));

    Ok((
        bounds.clamp(pitch_scale),
        bounds.clamp(energy_scale),
        bounds.clamp(duration_scale),
    ))
}

/// Cues for every stressed word decision. Words whose frame range turned
/// out empty are skipped (they cannot be stressed).
pub fn derive_cues(
    decisions: &[WordStressDecision],
    f0: &[f64],
    energy: &[f64],
    words: &WordAlignment,
    grid: &FrameGrid,
    bounds: &ScaleBounds,
    duration_scale: f64,
) -> Result<Vec<StressCue>, PostprocessError> {
    let mut cues = Vec::new();
    for decision in decisions.iter().filter(|d| d.stressed) {
        let range = frames_for_word(&words.words[decision.word_index], grid);
        if range.is_empty() {
            continue;
        }
        let (pitch_scale, energy_scale, dur) =
            compute_scaling_factors(f0, energy, range, bounds, duration_scale)?;
        cues.push(StressCue {
            word_index: decision.word_index,
            word: decision.word.clone(),
            pitch_scale,
            energy_scale,
            duration_scale: dur,
        });
    }
    Ok(cues)
}

/// Word-level accuracy of predicted decisions against gold decisions.
pub fn post_accuracy(
    predicted: &[WordStressDecision],
    gold: &[WordStressDecision],
) -> Result<f64, PostprocessError> {
    if predicted.len() != gold.len() {
        return Err(PostprocessError::WordListMismatch(format!(
            "{} predicted vs {} gold words",
            predicted.len(),
            gold.len()
        )));
    }
    if predicted.is_empty() {
        return Err(PostprocessError::WordListMismatch("empty word lists".into()));
    }
    for (p, g) in predicted.iter().zip(gold.iter()) {
        if p.word != g.word {
            return Err(PostprocessError::WordListMismatch(format!(
                "word {} differs: '{}' vs '{}'",
                p.word_index, p.word, g.word
            )));
        }
    }
    let agree = predicted.iter().zip(gold.iter()).filter(|(p, g)| p.stressed == g.stressed).count();
    Ok(agree as f64 / predicted.len() as f64)
}
