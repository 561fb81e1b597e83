//! The per-stage commands. Each one is a thin wrapper over one module
//! operation family; stages communicate only through the documented file
//! formats, so external ASR/MT/TTS systems can be slotted in at any
//! boundary.

use std::path::{Path, PathBuf};

use stresskit_core::annotation::{aggregate_regions, dataset_stats};
use stresskit_core::classifier::{load_model, model_to_bytes, predict, train};
use stresskit_core::config::PipelineConfig;
use stresskit_core::dsp::{assemble_features, frame_energy, frame_signal, FeatureMatrix};
use stresskit_core::dsp::estimate_f0;
use stresskit_core::io::{
    self, read_feature_matrix, read_wav, write_feature_matrix, CueDocument, GoldLabels,
};
use stresskit_core::pde::{apply_cues, clamp_scales};
use stresskit_core::postprocess::{derive_cues, word_level_stress};
use stresskit_core::transfer::map_cues;

use crate::runner::{
    atomic_write, default_jobs, list_files, paired_file, process_files, stem, FileOutcome,
    StageSummary,
};
use crate::CliError;

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

fn finish_stage(name: &str, summary: &StageSummary, total: usize) -> Result<(), CliError> {
    println!(
        "{name}: {} written, {} skipped, {} failed ({total} files)",
        summary.written,
        summary.skipped,
        summary.errors.len()
    );
    if summary.errors.is_empty() {
        Ok(())
    } else {
        for (path, message) in &summary.errors {
            eprintln!("error: {}: {message}", path.display());
        }
        Err(CliError::Data(format!("{name}: {} file(s) failed", summary.errors.len())))
    }
}

pub fn cmd_features(
    cfg: &PipelineConfig,
    jobs: Option<usize>,
    wav_dir: &Path,
    out_dir: &Path,
    fail_fast: bool,
) -> Result<(), CliError> {
    cfg.features.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    ensure_out_dir(out_dir)?;
    let files = list_files(wav_dir, ".wav")?;
    let digest = cfg.features.digest();
    println!("config digest {}", &cfg.features.digest_hex()[..12]);

    let summary = process_files(&files, jobs.unwrap_or_else(default_jobs), fail_fast, |wav| {
        let out = out_dir.join(format!("{}.sfea", stem(wav)));
        if is_feature_file_current(&out, &digest, wav) {
            return Ok(FileOutcome::Skipped);
        }
        let audio = read_wav(wav).map_err(|e| e.to_string())?;
        if audio.sample_rate != cfg.features.frame.sample_rate {
            return Err(format!(
                "sample rate {} does not match configured {} (no resampling is performed)",
                audio.sample_rate, cfg.features.frame.sample_rate
            ));
        }
        let extraction = assemble_features(&audio, &cfg.features).map_err(|e| e.to_string())?;
        write_feature_atomic(&extraction.matrix, &out).map_err(|e| e.to_string())?;
        Ok(FileOutcome::Written)
    });
    finish_stage("features", &summary, files.len())
}

fn is_feature_file_current(out: &Path, digest: &[u8; 32], wav: &Path) -> bool {
    if !out.is_file() {
        return false;
    }
    match read_feature_matrix(out, Some(digest)) {
        Ok(_) => {
            let newer_input = match (wav.metadata(), out.metadata()) {
                (Ok(w), Ok(o)) => match (w.modified(), o.modified()) {
                    (Ok(wm), Ok(om)) => wm > om,
                    _ => true,
                },
                _ => true,
            };
            !newer_input
        }
        Err(_) => false,
    }
}

fn write_feature_atomic(matrix: &FeatureMatrix, out: &Path) -> Result<(), String> {
    let tmp = out.with_extension("sfea.tmp");
    write_feature_matrix(matrix, &tmp).map_err(|e| e.to_string())?;
    std::fs::rename(&tmp, out).map_err(|e| e.to_string())
}

pub fn cmd_aggregate(
    cfg: &PipelineConfig,
    jobs: Option<usize>,
    ann_dir: &Path,
    out_dir: &Path,
) -> Result<(), CliError> {
    cfg.features.frame.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    ensure_out_dir(out_dir)?;
    let files = list_files(ann_dir, ".json")?;

    let summary = process_files(&files, jobs.unwrap_or_else(default_jobs), false, |path| {
        let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
        let set = io::parse_annotation_file(&bytes).map_err(|e| e.to_string())?;
        if set.sample_rate != cfg.features.frame.sample_rate {
            return Err(format!(
                "annotation sample rate {} does not match configured {}",
                set.sample_rate, cfg.features.frame.sample_rate
            ));
        }
        let grid = cfg.features.frame.grid_for_duration(set.duration_s);
        let agg =
            aggregate_regions(&set, &grid, cfg.min_annotators).map_err(|e| e.to_string())?;
        // Quality gate: degenerate agreement (kappa undefined, e.g. no
        // regions at all) is not gated.
        if let (Some(min), Some(kappa)) = (cfg.min_kappa, agg.kappa) {
            if kappa < min {
                return Err(format!("kappa {kappa:.3} below configured minimum {min}"));
            }
        }
        let doc = GoldLabels {
            audio_id: set.audio_id.clone(),
            frame_labels: agg.frame_labels.iter().map(|&b| u8::from(b)).collect(),
            gold_regions: agg.gold_regions,
            kappa: agg.kappa,
        };
        let out = out_dir.join(format!("{}.json", stem(path)));
        atomic_write(&out, &io::serialize_gold_labels(&doc)).map_err(|e| e.to_string())?;
        Ok(FileOutcome::Written)
    });
    finish_stage("aggregate", &summary, files.len())
}

pub fn cmd_stats(ann_dir: &Path) -> Result<(), CliError> {
    let files = list_files(ann_dir, ".json")?;
    let mut sets = Vec::with_capacity(files.len());
    for path in &files {
        let bytes =
            std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let set = io::parse_annotation_file(&bytes)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        sets.push(set);
    }
    let stats = dataset_stats(&sets);
    println!("files: {}", stats.n_files);
    println!("stressed regions: {}", stats.n_regions);
    println!("mean region duration: {:.3} s", stats.mean_region_duration_s);
    println!("speakers: {}", stats.per_speaker.len());
    for (speaker, s) in &stats.per_speaker {
        println!("  {speaker}: {} files, {} regions", s.files, s.regions);
    }
    Ok(())
}

pub fn cmd_train(
    cfg: &PipelineConfig,
    features_dir: &Path,
    labels_dir: &Path,
    out: &Path,
) -> Result<(), CliError> {
    cfg.features.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let digest = cfg.features.digest();
    let files = list_files(features_dir, ".sfea")?;
    if files.is_empty() {
        return Err(CliError::Data(format!(
            "no feature files in {}",
            features_dir.display()
        )));
    }

    let mut labels: Vec<bool> = Vec::new();
    let mut combined: Option<FeatureMatrix> = None;
    for path in &files {
        let data_err = |message: String| CliError::Data(format!("{}: {message}", path.display()));
        let matrix =
            read_feature_matrix(path, Some(&digest)).map_err(|e| data_err(e.to_string()))?;
        let labels_path =
            paired_file(labels_dir, &stem(path), ".json").map_err(data_err)?;
        let bytes = std::fs::read(&labels_path).map_err(|e| data_err(e.to_string()))?;
        let gold = io::parse_gold_labels(&bytes).map_err(|e| data_err(e.to_string()))?;
        if gold.frame_labels.len() != matrix.n_rows {
            return Err(data_err(format!(
                "{} labels for {} feature rows (frame grids differ)",
                gold.frame_labels.len(),
                matrix.n_rows
            )));
        }
        labels.extend(gold.labels_as_bool());
        match &mut combined {
            None => combined = Some(matrix),
            Some(acc) => {
                if matrix.n_cols != acc.n_cols {
                    return Err(data_err(format!(
                        "{} columns, expected {}",
                        matrix.n_cols, acc.n_cols
                    )));
                }
                acc.data.extend_from_slice(&matrix.data);
                acc.n_rows += matrix.n_rows;
            }
        }
    }

    let combined = combined.expect("at least one file");
    let stressed = labels.iter().filter(|&&l| l).count();
    let minority = stressed.min(labels.len() - stressed);
    if minority < 2 {
        eprintln!("warning: minority class has {minority} frame(s); SMOTE will pass through");
    }
    let model = train(&combined, &labels, &cfg.model, Some(&cfg.smote))
        .map_err(|e| CliError::Data(e.to_string()))?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_out_dir(parent)?;
        }
    }
    atomic_write(out, &model_to_bytes(&model))
        .map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    println!(
        "train: {} frames ({} stressed) from {} files -> {} [{}]",
        combined.n_rows,
        stressed,
        files.len(),
        out.display(),
        cfg.model.family.as_str()
    );
    Ok(())
}

pub fn cmd_detect(
    cfg: &PipelineConfig,
    jobs: Option<usize>,
    wav_dir: &Path,
    align_dir: &Path,
    model_path: &Path,
    out_dir: &Path,
) -> Result<(), CliError> {
    cfg.features.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    ensure_out_dir(out_dir)?;
    let model = load_model(model_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", model_path.display())))?;
    if model.feature_digest != cfg.features.digest() {
        return Err(CliError::Data(format!(
            "model {} was trained under a different feature config (digest mismatch)",
            model_path.display()
        )));
    }
    let files = list_files(wav_dir, ".wav")?;

    let summary = process_files(&files, jobs.unwrap_or_else(default_jobs), false, |wav| {
        let audio = read_wav(wav).map_err(|e| e.to_string())?;
        if audio.sample_rate != cfg.features.frame.sample_rate {
            return Err(format!(
                "sample rate {} does not match configured {}",
                audio.sample_rate, cfg.features.frame.sample_rate
            ));
        }
        let words_path = paired_file(align_dir, &stem(wav), ".json")?;
        let words = io::parse_word_alignment(
            &std::fs::read(&words_path).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;

        let extraction = assemble_features(&audio, &cfg.features).map_err(|e| e.to_string())?;
        let (preds, _) = predict(&model, &extraction.matrix).map_err(|e| e.to_string())?;
        let decisions =
            word_level_stress(&preds, &words, &extraction.grid).map_err(|e| e.to_string())?;

        let frames = frame_signal(&audio, &cfg.features.frame).map_err(|e| e.to_string())?;
        let energy = frame_energy(&frames);
        let f0 = estimate_f0(&audio, &cfg.features.frame, &cfg.features.pitch)
            .map_err(|e| e.to_string())?;
        let cues = derive_cues(
            &decisions,
            &f0,
            &energy,
            &words,
            &extraction.grid,
            &cfg.clamp,
            cfg.duration_scale,
        )
        .map_err(|e| e.to_string())?;

        let doc = CueDocument { cues, unmapped_sources: vec![] };
        let out = out_dir.join(format!("{}.json", stem(wav)));
        atomic_write(&out, &io::serialize_stress_cues(&doc)).map_err(|e| e.to_string())?;
        Ok(FileOutcome::Written)
    });
    finish_stage("detect", &summary, files.len())
}

/// Resolve (input, output) pairs for commands that accept either single
/// files or directories.
fn io_pairs(
    input: &Path,
    sibling: &Path,
    out: &Path,
) -> Result<Vec<(PathBuf, PathBuf, PathBuf)>, CliError> {
    if input.is_dir() {
        if !sibling.is_dir() {
            return Err(CliError::Data(format!(
                "{} is a directory but {} is not",
                input.display(),
                sibling.display()
            )));
        }
        std::fs::create_dir_all(out)
            .map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
        let files = list_files(input, ".json")?;
        let mut pairs = Vec::new();
        for file in files {
            let s = stem(&file);
            let other = paired_file(sibling, &s, ".json")
                .map_err(|m| CliError::Data(format!("{}: {m}", file.display())))?;
            pairs.push((file, other, out.join(format!("{s}.json"))));
        }
        Ok(pairs)
    } else {
        if let Some(parent) = out.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::Data(format!("{}: {e}", parent.display())))?;
            }
        }
        Ok(vec![(input.to_path_buf(), sibling.to_path_buf(), out.to_path_buf())])
    }
}

pub fn cmd_transfer(cues: &Path, mt_align: &Path, out: &Path) -> Result<(), CliError> {
    let pairs = io_pairs(cues, mt_align, out)?;
    let total = pairs.len();
    let mut written = 0;
    for (cue_path, align_path, out_path) in pairs {
        let data_err =
            |p: &Path, m: String| CliError::Data(format!("{}: {m}", p.display()));
        let doc = io::parse_stress_cues(
            &std::fs::read(&cue_path).map_err(|e| data_err(&cue_path, e.to_string()))?,
        )
        .map_err(|e| data_err(&cue_path, e.to_string()))?;
        let alignment = io::parse_mt_alignment(
            &std::fs::read(&align_path).map_err(|e| data_err(&align_path, e.to_string()))?,
        )
        .map_err(|e| data_err(&align_path, e.to_string()))?;
        let mapped =
            map_cues(&doc.cues, &alignment).map_err(|e| data_err(&cue_path, e.to_string()))?;
        if !mapped.unmapped_sources.is_empty() {
            eprintln!(
                "warning: {}: {} stressed source word(s) had no alignment link",
                cue_path.display(),
                mapped.unmapped_sources.len()
            );
        }
        atomic_write(&out_path, &io::serialize_stress_cues(&mapped.into()))
            .map_err(|e| data_err(&out_path, e.to_string()))?;
        written += 1;
    }
    println!("transfer: {written} written ({total} files)");
    Ok(())
}

pub fn cmd_modify(
    cfg: &PipelineConfig,
    contours: &Path,
    cues: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let pairs = io_pairs(contours, cues, out)?;
    let total = pairs.len();
    let mut written = 0;
    for (contour_path, cue_path, out_path) in pairs {
        let data_err =
            |p: &Path, m: String| CliError::Data(format!("{}: {m}", p.display()));
        let contour_doc = io::parse_token_contours(
            &std::fs::read(&contour_path).map_err(|e| data_err(&contour_path, e.to_string()))?,
        )
        .map_err(|e| data_err(&contour_path, e.to_string()))?;
        let cue_doc = io::parse_stress_cues(
            &std::fs::read(&cue_path).map_err(|e| data_err(&cue_path, e.to_string()))?,
        )
        .map_err(|e| data_err(&cue_path, e.to_string()))?;
        let clamped = clamp_scales(&cue_doc.into(), &cfg.clamp)
            .map_err(|e| data_err(&cue_path, e.to_string()))?;
        let modified = apply_cues(&contour_doc, &clamped)
            .map_err(|e| data_err(&contour_path, e.to_string()))?;
        atomic_write(&out_path, &io::serialize_modified_contours(&modified))
            .map_err(|e| data_err(&out_path, e.to_string()))?;
        written += 1;
    }
    println!("modify: {written} written ({total} files)");
    Ok(())
}
