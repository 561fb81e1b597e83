//! Multi-annotator stress-region aggregation and agreement.
//!
//! Annotators mark free time spans; gold frame labels come from a strict
//! per-frame majority vote over annotators, and Fleiss kappa quantifies
//! how much they agreed. Contiguous gold frames are merged back into gold
//! regions snapped to the frame grid.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::dsp::FrameGrid;

#[derive(Debug, Error, PartialEq)]
pub enum AnnotationError {
    #[error("rating rows must all sum to the same rater count (>= 2)")]
    UnequalRaterCounts,
    #[error("all ratings fall in a single category; kappa is undefined")]
    DegenerateAgreement,
    #[error("need at least {min} annotators, got {got}")]
    TooFewAnnotators { got: usize, min: usize },
}

/// A time span one annotator marked as stressed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressRegion {
    pub start_s: f64,
    pub end_s: f64,
}

impl StressRegion {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn contains(&self, time_s: f64) -> bool {
        time_s >= self.start_s && time_s < self.end_s
    }
}

/// One annotator's regions for a single audio file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorMarks {
    pub annotator_id: String,
    pub regions: Vec<StressRegion>,
}

/// All annotations for one audio file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub audio_id: String,
    pub sample_rate: u32,
    pub duration_s: f64,
    pub annotations: Vec<AnnotatorMarks>,
}

impl AnnotationSet {
    pub fn n_annotators(&self) -> usize {
        self.annotations.len()
    }

    /// Speaker id convention: everything before the first underscore of
    /// the audio id (e.g. "spk03_0012" -> "spk03").
    pub fn speaker_id(&self) -> &str {
        self.audio_id.split('_').next().unwrap_or(&self.audio_id)
    }
}

/// Fleiss kappa over an items x categories matrix of rating counts.
///
/// Every row must sum to the same number of raters n >= 2. Returns 1.0
/// exactly for unanimous ratings, and an error when expected agreement
/// is 1 (all ratings in one category), where kappa is undefined.
pub fn fleiss_kappa(counts: &[Vec<usize>]) -> Result<f64, AnnotationError> {
    let n_items = counts.len();
    if n_items == 0 {
        return Err(AnnotationError::UnequalRaterCounts);
    }
    let n_cats = counts[0].len();
    if n_cats < 2 {
        return Err(AnnotationError::DegenerateAgreement);
    }
    let n_raters: usize = counts[0].iter().sum();
    if n_raters < 2 {
        return Err(AnnotationError::UnequalRaterCounts);
    }
    for row in counts {
        if row.len() != n_cats || row.iter().sum::<usize>() != n_raters {
            return Err(AnnotationError::UnequalRaterCounts);
        }
    }

    let n = n_raters as f64;
    let total = (n_items * n_raters) as f64;

    // Per-item agreement P_i and category proportions p_j.
    let mut p_bar = 0.0;
    let mut category_totals = vec![0usize; n_cats];
    for row in counts {
        let sum_sq: usize = row.iter().map(|&c| c * c).sum();
        p_bar += (sum_sq as f64 - n) / (n * (n - 1.0));
        for (j, &c) in row.iter().enumerate() {
            category_totals[j] += c;
        }
    }
    p_bar /= n_items as f64;

    let p_e: f64 = category_totals
        .iter()
        .map(|&t| {
            let p = t as f64 / total;
            p * p
        })
        .sum();

    if category_totals.iter().any(|&t| t == n_items * n_raters) {
        return Err(AnnotationError::DegenerateAgreement);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Frame labels for regions: label[t] = 1 iff the frame center lies in
/// any region, using half-open [start, end) intervals.
pub fn regions_to_frame_labels(regions: &[StressRegion], grid: &FrameGrid) -> Vec<bool> {
    (0..grid.n_frames)
        .map(|t| {
            let c = grid.center_time(t);
            regions.iter().any(|r| r.contains(c))
        })
        .collect()
}

/// Result of aggregating one file's annotations onto a frame grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    /// Strict-majority gold label per frame.
    pub frame_labels: Vec<bool>,
    /// Contiguous gold frames merged into regions snapped to the grid.
    pub gold_regions: Vec<StressRegion>,
    /// Fleiss kappa over the per-frame ratings; None when agreement is
    /// degenerate (e.g. nobody marked anything).
    pub kappa: Option<f64>,
}

/// Majority-vote aggregation of all annotators onto the frame grid.
///
/// A frame is gold-stressed iff strictly more than half the annotators
/// marked a region covering its center. Ties on even annotator counts
/// resolve to unstressed.
pub fn aggregate_regions(
    set: &AnnotationSet,
    grid: &FrameGrid,
    min_annotators: usize,
) -> Result<Aggregation, AnnotationError> {
    let n = set.n_annotators();
    if n < min_annotators.max(1) {
        return Err(AnnotationError::TooFewAnnotators { got: n, min: min_annotators.max(1) });
    }

    let mut stressed_counts = vec![0usize; grid.n_frames];
    for marks in &set.annotations {
        for (t, count) in stressed_counts.iter_mut().enumerate() {
            let c = grid.center_time(t);
            if marks.regions.iter().any(|r| r.contains(c)) {
                *count += 1;
            }
        }
    }

    let frame_labels: Vec<bool> = stressed_counts.iter().map(|&c| 2 * c > n).collect();
    let gold_regions = frames_to_regions(&frame_labels, grid);

    // Kappa needs at least two raters; a single annotator has no
    // agreement to measure.
    let kappa = if n >= 2 {
        let counts: Vec<Vec<usize>> =
            stressed_counts.iter().map(|&c| vec![c, n - c]).collect();
        match fleiss_kappa(&counts) {
            Ok(k) => Some(k),
            Err(AnnotationError::DegenerateAgreement) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    Ok(Aggregation { frame_labels, gold_regions, kappa })
}

/// Merge runs of stressed frames into regions. A run first..=last maps to
/// [center(first), center(last + 1)), which reproduces exactly the same
/// frames when converted back to labels.
pub fn frames_to_regions(labels: &[bool], grid: &FrameGrid) -> Vec<StressRegion> {
    let mut regions = Vec::new();
    let mut run_start: Option<usize> = None;
    for (t, &stressed) in labels.iter().enumerate() {
        match (stressed, run_start) {
            (true, None) => run_start = Some(t),
            (false, Some(first)) => {
                regions.push(StressRegion {
                    start_s: grid.center_time(first),
                    end_s: grid.center_time(t),
                });
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(first) = run_start {
        regions.push(StressRegion {
            start_s: grid.center_time(first),
            end_s: grid.center_time(labels.len()),
        });
    }
    regions
}

/// Corpus-level summary of a collection of annotation sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_files: usize,
    pub n_regions: usize,
    pub mean_region_duration_s: f64,
    pub per_speaker: BTreeMap<String, SpeakerStats>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpeakerStats {
    pub files: usize,
    pub regions: usize,
}

/// Region counts use every annotator's regions (each marked occurrence
/// counts once).
pub fn dataset_stats(sets: &[AnnotationSet]) -> DatasetStats {
    let mut n_regions = 0usize;
    let mut total_duration = 0.0f64;
    let mut per_speaker: BTreeMap<String, SpeakerStats> = BTreeMap::new();
    for set in sets {
        let entry = per_speaker.entry(set.speaker_id().to_string()).or_default();
        entry.files += 1;
        for marks in &set.annotations {
            for region in &marks.regions {
                n_regions += 1;
                entry.regions += 1;
                total_duration += region.duration_s();
            }
        }
    }
    DatasetStats {
        n_files: sets.len(),
        n_regions,
        mean_region_duration_s: if n_regions > 0 { total_duration / n_regions as f64 } else { 0.0 },
        per_speaker,
    }
}
