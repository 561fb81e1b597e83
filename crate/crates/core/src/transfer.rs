//! Mapping stress cues across an MT word alignment.
//!
//! Each stressed source word fans its scales out to every aligned target
//! word. When several stressed source words collide on one target word
//! the target keeps the element-wise maximum of the competing scales, so
//! stress is preserved rather than diluted. Stressed sources with no
//! alignment link are reported, never dropped silently.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::io::MtAlignment;
use crate::postprocess::StressCue;

#[derive(Debug, Error, PartialEq)]
pub enum TransferError {
    #[error("cue references source word {index} but alignment has {len} source words")]
    IndexOutOfBounds { index: usize, len: usize },
}

/// Cues re-indexed onto target words, plus the stressed source indices
/// that had no alignment link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetCueSet {
    pub cues: Vec<StressCue>,
    pub unmapped_sources: Vec<usize>,
}

pub fn map_cues(
    source_cues: &[StressCue],
    alignment: &MtAlignment,
) -> Result<TargetCueSet, TransferError> {
    let n_source = alignment.source_words.len();
    let mut by_target: BTreeMap<usize, StressCue> = BTreeMap::new();
    let mut unmapped = Vec::new();

    for cue in source_cues {
        if cue.word_index >= n_source {
            return Err(TransferError::IndexOutOfBounds { index: cue.word_index, len: n_source });
        }
        let mut mapped = false;
        for &(src, tgt) in &alignment.links {
            if src != cue.word_index {
                continue;
            }
            mapped = true;
            let entry = by_target.entry(tgt).or_insert_with(|| StressCue {
                word_index: tgt,
                word: alignment.target_words[tgt].clone(),
                pitch_scale: cue.pitch_scale,
                energy_scale: cue.energy_scale,
                duration_scale: cue.duration_scale,
            });
            entry.pitch_scale = entry.pitch_scale.max(cue.pitch_scale);
            entry.energy_scale = entry.energy_scale.max(cue.energy_scale);
            entry.duration_scale = entry.duration_scale.max(cue.duration_scale);
        }
        if !mapped {
            unmapped.push(cue.word_index);
        }
    }

    Ok(TargetCueSet { cues: by_target.into_values().collect(), unmapped_sources: unmapped })
}
