//! Evaluation harness: trains every requested (feature set, window,
//! model family) combination on a speaker-disjoint split of a labeled
//! corpus and reports frame accuracy, stressed-class F1 and word-level
//! post accuracy per combination.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use stresskit_core::annotation::aggregate_regions;
use stresskit_core::classifier::{evaluate, predict, train, ModelFamily};
use stresskit_core::config::PipelineConfig;
use stresskit_core::dsp::{assemble_features, FeatureConfig, FeatureMatrix, FeatureSet};
use stresskit_core::io::{self, read_wav, AudioBuffer, WordAlignment};
use stresskit_core::postprocess::word_level_stress;
use stresskit_core::rng::SplitMix64;

use crate::runner::{atomic_write, list_files, paired_file, stem};
use crate::CliError;

struct Utterance {
    audio: AudioBuffer,
    words: WordAlignment,
    gold_frames: Vec<bool>,
    speaker: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalRow {
    pub features: String,
    pub window: usize,
    pub model: String,
    pub accuracy: f64,
    pub f1: f64,
    pub post_accuracy: f64,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    train_speakers: Vec<String>,
    test_speakers: Vec<String>,
    rows: Vec<EvalRow>,
}

pub struct EvalGrid {
    pub feature_sets: Vec<FeatureSet>,
    pub windows: Vec<usize>,
    pub families: Vec<ModelFamily>,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_eval(
    cfg: &PipelineConfig,
    wav_dir: &Path,
    ann_dir: &Path,
    align_dir: &Path,
    grid: &EvalGrid,
    report_path: Option<&Path>,
) -> Result<(), CliError> {
    let corpus = load_corpus(cfg, wav_dir, ann_dir, align_dir)?;
    let (train_speakers, test_speakers) = split_speakers(&corpus, cfg.rng_seed)?;

    let mut rows = Vec::new();
    for &feature_set in &grid.feature_sets {
        for &window in &grid.windows {
            let feature_cfg = FeatureConfig {
                feature_set,
                window,
                ..cfg.features.clone()
            };
            feature_cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

            let mut train_x: Option<FeatureMatrix> = None;
            let mut train_y: Vec<bool> = Vec::new();
            let mut test_set = Vec::new();
            for utterance in &corpus {
                let extraction = assemble_features(&utterance.audio, &feature_cfg)
                    .map_err(|e| CliError::Data(e.to_string()))?;
                if train_speakers.contains(&utterance.speaker) {
                    train_y.extend(&utterance.gold_frames);
                    match &mut train_x {
                        None => train_x = Some(extraction.matrix),
                        Some(acc) => {
                            acc.data.extend_from_slice(&extraction.matrix.data);
                            acc.n_rows += extraction.matrix.n_rows;
                        }
                    }
                } else {
                    test_set.push((utterance, extraction));
                }
            }
            let train_x = train_x.ok_or_else(|| CliError::Data("empty train split".into()))?;

            for &family in &grid.families {
                let mut model_cfg = cfg.model.clone();
                model_cfg.family = family;
                let model = train(&train_x, &train_y, &model_cfg, Some(&cfg.smote))
                    .map_err(|e| CliError::Data(e.to_string()))?;

                let mut frame_preds = Vec::new();
                let mut frame_truth = Vec::new();
                let mut words_agree = 0usize;
                let mut words_total = 0usize;
                for (utterance, extraction) in &test_set {
                    let (preds, _) = predict(&model, &extraction.matrix)
                        .map_err(|e| CliError::Data(e.to_string()))?;
                    let pred_words =
                        word_level_stress(&preds, &utterance.words, &extraction.grid)
                            .map_err(|e| CliError::Data(e.to_string()))?;
                    let gold_words = word_level_stress(
                        &utterance.gold_frames,
                        &utterance.words,
                        &extraction.grid,
                    )
                    .map_err(|e| CliError::Data(e.to_string()))?;
                    words_total += pred_words.len();
                    words_agree += pred_words
                        .iter()
                        .zip(gold_words.iter())
                        .filter(|(p, g)| p.stressed == g.stressed)
                        .count();
                    frame_preds.extend(preds);
                    frame_truth.extend(&utterance.gold_frames);
                }

                let metrics = evaluate(&frame_preds, &frame_truth)
                    .map_err(|e| CliError::Data(e.to_string()))?;
                rows.push(EvalRow {
                    features: feature_set.as_str().to_string(),
                    window,
                    model: family.as_str().to_string(),
                    accuracy: metrics.accuracy,
                    f1: metrics.f1,
                    post_accuracy: if words_total > 0 {
                        words_agree as f64 / words_total as f64
                    } else {
                        0.0
                    },
                });
            }
        }
    }

    print_table(&grid.windows, &rows);
    println!(
        "split: train speakers {:?}, test speakers {:?}",
        train_speakers.iter().collect::<Vec<_>>(),
        test_speakers.iter().collect::<Vec<_>>()
    );

    if let Some(path) = report_path {
        let report = EvalReport {
            train_speakers: train_speakers.into_iter().collect(),
            test_speakers: test_speakers.into_iter().collect(),
            rows,
        };
        let mut bytes = serde_json::to_vec_pretty(&report)
            .map_err(|e| CliError::Data(e.to_string()))?;
        bytes.push(b'\n');
        atomic_write(path, &bytes)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn load_corpus(
    cfg: &PipelineConfig,
    wav_dir: &Path,
    ann_dir: &Path,
    align_dir: &Path,
) -> Result<Vec<Utterance>, CliError> {
    let files = list_files(ann_dir, ".json")?;
    if files.is_empty() {
        return Err(CliError::Data(format!("no annotation files in {}", ann_dir.display())));
    }
    let mut corpus = Vec::with_capacity(files.len());
    for path in &files {
        let data_err = |m: String| CliError::Data(format!("{}: {m}", path.display()));
        let set = io::parse_annotation_file(
            &std::fs::read(path).map_err(|e| data_err(e.to_string()))?,
        )
        .map_err(|e| data_err(e.to_string()))?;
        if set.sample_rate != cfg.features.frame.sample_rate {
            return Err(data_err(format!(
                "annotation sample rate {} does not match configured {}",
                set.sample_rate, cfg.features.frame.sample_rate
            )));
        }
        let s = stem(path);
        let wav_path = paired_file(wav_dir, &s, ".wav").map_err(data_err)?;
        let audio = read_wav(&wav_path).map_err(|e| data_err(e.to_string()))?;
        let words_path = paired_file(align_dir, &s, ".json").map_err(data_err)?;
        let words = io::parse_word_alignment(
            &std::fs::read(&words_path).map_err(|e| data_err(e.to_string()))?,
        )
        .map_err(|e| data_err(e.to_string()))?;

        // Gold labels live on the grid of the actual audio so they line
        // up with the feature rows.
        let grid = cfg.features.frame.grid_for_len(audio.samples.len());
        let agg = aggregate_regions(&set, &grid, cfg.min_annotators)
            .map_err(|e| data_err(e.to_string()))?;
        corpus.push(Utterance {
            speaker: set.speaker_id().to_string(),
            audio,
            words,
            gold_frames: agg.frame_labels,
        });
    }
    Ok(corpus)
}

/// Seed-controlled speaker-disjoint 80/20 split.
fn split_speakers(
    corpus: &[Utterance],
    seed: u64,
) -> Result<(BTreeSet<String>, BTreeSet<String>), CliError> {
    let speakers: BTreeSet<String> = corpus.iter().map(|u| u.speaker.clone()).collect();
    if speakers.len() < 2 {
        return Err(CliError::Data(format!(
            "speaker-disjoint split needs at least 2 speakers, found {}",
            speakers.len()
        )));
    }
    let mut ordered: Vec<String> = speakers.into_iter().collect();
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut ordered);
    let n_train = ((ordered.len() as f64) * 0.8).round() as usize;
    let n_train = n_train.clamp(1, ordered.len() - 1);
    let train: BTreeSet<String> = ordered[..n_train].iter().cloned().collect();
    let test: BTreeSet<String> = ordered[n_train..].iter().cloned().collect();
    Ok((train, test))
}

/// Table-1-shaped output: one row per (features, model), a column triple
/// per window size.
fn print_table(windows: &[usize], rows: &[EvalRow]) {
    let mut header = format!("{:<8} {:<6}", "features", "model");
    for w in windows {
        header.push_str(&format!(
            " | {:>7} {:>7} {:>7}",
            format!("w{w} acc"),
            "f1",
            "post"
        ));
    }
    println!("{header}");
    println!("{}", "-".repeat(header.len()));

    let mut keys: Vec<(String, String)> = rows
        .iter()
        .map(|r| (r.features.clone(), r.model.clone()))
        .collect();
    keys.dedup();
    for (features, model) in keys {
        let mut line = format!("{features:<8} {model:<6}");
        for &w in windows {
            match rows.iter().find(|r| {
                r.features == features && r.model == model && r.window == w
            }) {
                Some(r) => line.push_str(&format!(
                    " | {:>7.1} {:>7.2} {:>7.2}",
                    r.accuracy * 100.0,
                    r.f1 * 100.0,
                    r.post_accuracy * 100.0
                )),
                None => line.push_str(&format!(" | {:>7} {:>7} {:>7}", "-", "-", "-")),
            }
        }
        println!("{line}");
    }
}
