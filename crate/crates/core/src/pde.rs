//! Pitch-Duration-Energy modifier.
//!
//! Takes the TTS variance predictor's per-token pitch, energy and
//! duration values and rescales the tokens belonging to stressed target
//! words. Durations are re-rounded to whole frames (half away from zero)
//! with a floor of one frame for tokens that originally had nonzero
//! duration, so no token disappears under scaling. The modified
//! durations drive the discrete upsampling from token resolution to
//! frame resolution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::postprocess::{ScaleBounds, StressCue};
use crate::transfer::TargetCueSet;

#[derive(Debug, Error, PartialEq)]
pub enum PdeError {
    #[error("cue references word {0} but no token maps to it")]
    UnknownWordIndex(usize),
    #[error("negative duration {value} at token {index}")]
    NegativeDuration { index: usize, value: i64 },
    #[error("values and durations differ in length: {values} vs {durations}")]
    LengthMismatch { values: usize, durations: usize },
    #[error("invalid scale bounds: lo {lo}, hi {hi}")]
    InvalidBounds { lo: f64, hi: f64 },
}

/// Variance-predictor output at token resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenContours {
    pub tokens: Vec<String>,
    /// Target-word index of each token; nondecreasing.
    pub token_word_index: Vec<usize>,
    pub pitch: Vec<f64>,
    pub energy: Vec<f64>,
    /// Predicted durations in frames; nonnegative, not necessarily whole.
    pub duration: Vec<f64>,
}

impl TokenContours {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Contours after cue application: same token sequence, integral frame
/// durations, plus a log of the cues that were applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifiedContours {
    pub tokens: Vec<String>,
    pub token_word_index: Vec<usize>,
    pub pitch: Vec<f64>,
    pub energy: Vec<f64>,
    pub duration: Vec<i64>,
    pub applied_cues: Vec<StressCue>,
}

fn round_duration(frames: f64) -> i64 {
    let rounded = frames.round() as i64; // round half away from zero
    if frames > 0.0 {
        rounded.max(1)
    } else {
        0
    }
}

/// Scale the variances of every token belonging to a cued word.
///
/// Cued tokens get pitch and energy multiplied by the cue's factors and
/// duration rescaled then re-rounded; all other tokens keep their values
/// bit-identically (durations go through the same rounding rule).
pub fn apply_cues(
    contours: &TokenContours,
    cues: &TargetCueSet,
) -> Result<ModifiedContours, PdeError> {
    for cue in &cues.cues {
        if !contours.token_word_index.contains(&cue.word_index) {
            return Err(PdeError::UnknownWordIndex(cue.word_index));
        }
    }

    let cue_for = |word: usize| cues.cues.iter().find(|c| c.word_index == word);

    let n = contours.len();
    let mut pitch = Vec::with_capacity(n);
    let mut energy = Vec::with_capacity(n);
    let mut duration = Vec::with_capacity(n);
    for i in 0..n {
        match cue_for(contours.token_word_index[i]) {
            Some(cue) => {
                pitch.push(contours.pitch[i] * cue.pitch_scale);
                energy.push(contours.energy[i] * cue.energy_scale);
                duration.push(round_duration(contours.duration[i] * cue.duration_scale));
            }
            None => {
                pitch.push(contours.pitch[i]);
                energy.push(contours.energy[i]);
                duration.push(round_duration(contours.duration[i]));
            }
        }
    }

    Ok(ModifiedContours {
        tokens: contours.tokens.clone(),
        token_word_index: contours.token_word_index.clone(),
        pitch,
        energy,
        duration,
        applied_cues: cues.cues.clone(),
    })
}

/// Repeat each value `durations[i]` times; output length is the duration
/// sum. This is the discrete token-to-frame upsampling step.
pub fn upsample_by_duration(values: &[f64], durations: &[i64]) -> Result<Vec<f64>, PdeError> {
    if values.len() != durations.len() {
        return Err(PdeError::LengthMismatch {
            values: values.len(),
            durations: durations.len(),
        });
    }
    if let Some((index, &value)) =
        durations.iter().enumerate().find(|(_, &d)| d < 0)
    {
        return Err(PdeError::NegativeDuration { index, value });
    }
    let total: i64 = durations.iter().sum();
    let mut out = Vec::with_capacity(total as usize);
    for (&v, &d) in values.iter().zip(durations.iter()) {
        for _ in 0..d {
            out.push(v);
        }
    }
    Ok(out)
}

/// Clamp every scale of every cue into `bounds`. Idempotent.
pub fn clamp_scales(cues: &TargetCueSet, bounds: &ScaleBounds) -> Result<TargetCueSet, PdeError> {
    if !(bounds.lo > 0.0 && bounds.lo <= bounds.hi) {
        return Err(PdeError::InvalidBounds { lo: bounds.lo, hi: bounds.hi });
    }
    Ok(TargetCueSet {
        cues: cues
            .cues
            .iter()
            .map(|c| StressCue {
                word_index: c.word_index,
                word: c.word.clone(),
                pitch_scale: bounds.clamp(c.pitch_scale),
                energy_scale: bounds.clamp(c.energy_scale),
                duration_scale: bounds.clamp(c.duration_scale),
            })
            .collect(),
        unmapped_sources: cues.unmapped_sources.clone(),
    })
}
