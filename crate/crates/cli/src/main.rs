//! Command-line pipeline for prosodic stress detection and transfer.
//!
//! Stages are file-driven so the external ASR, MT and TTS systems can be
//! swapped at the documented JSON boundaries: wav audio and annotation
//! documents come in; stress cues and modified synthesis contours come
//! out. Exit codes: 0 success, 1 data error, 2 usage error.

mod commands;
mod eval;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stresskit_core::classifier::ModelFamily;
use stresskit_core::config::PipelineConfig;
use stresskit_core::dsp::FeatureSet;
use stresskit_core::postprocess::ScaleBounds;

#[derive(Debug)]
pub enum CliError {
    /// Broken or inconsistent inputs (exit 1).
    Data(String),
    /// Bad invocation or configuration (exit 2).
    Usage(String),
}

#[derive(Parser)]
#[command(
    name = "stresskit",
    version,
    about = "Stress detection and cross-lingual stress transfer pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Pipeline config file (JSON); flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed for every random component (split, SMOTE, training).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker count for per-file stages (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Context window in frames.
    #[arg(long, global = true, value_parser = ["3", "5", "7"], value_name = "W")]
    window: Option<String>,

    /// Feature set: f0e (F0+energy) or full (F0, energy, MFCC, SDC).
    #[arg(long = "features", global = true, value_parser = ["f0e", "full"], value_name = "SET")]
    feature_set: Option<String>,

    /// Classifier family.
    #[arg(long, global = true, value_parser = ["svc", "rfc", "lpa"], value_name = "FAMILY")]
    model: Option<String>,

    /// Scale clamp range as LO:HI.
    #[arg(long, global = true, value_name = "LO:HI")]
    clamp: Option<String>,

    /// Duration scale emitted with every detected cue.
    #[arg(long, global = true, value_name = "F")]
    duration_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract feature matrices from a directory of wav files.
    Features {
        #[arg(long, value_name = "DIR")]
        wav_dir: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        /// Stop at the first failing file instead of reporting all.
        #[arg(long)]
        fail_fast: bool,
    },
    /// Aggregate multi-annotator regions into gold frame labels.
    Aggregate {
        #[arg(long, value_name = "DIR")]
        ann_dir: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Summarize an annotation corpus.
    Stats {
        #[arg(long, value_name = "DIR")]
        ann_dir: PathBuf,
    },
    /// Train a stress classifier from features and gold labels.
    Train {
        #[arg(long, value_name = "DIR")]
        features_dir: PathBuf,
        #[arg(long, value_name = "DIR")]
        labels_dir: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Detect stressed words and emit stress cues with scaling factors.
    Detect {
        #[arg(long, value_name = "DIR")]
        wav_dir: PathBuf,
        /// Directory of ASR word-alignment documents.
        #[arg(long, value_name = "DIR")]
        align_dir: PathBuf,
        #[arg(long = "model-file", value_name = "PATH")]
        model_file: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Train and score every (features, window, model) combination.
    Eval {
        #[arg(long, value_name = "DIR")]
        wav_dir: PathBuf,
        #[arg(long, value_name = "DIR")]
        ann_dir: PathBuf,
        #[arg(long, value_name = "DIR")]
        align_dir: PathBuf,
        /// Write the rows as a JSON report.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Map source-language cues onto target words via an MT alignment.
    Transfer {
        /// Cue document or directory of them.
        #[arg(long, value_name = "PATH")]
        cues: PathBuf,
        /// MT-alignment document or directory pairing the cues by stem.
        #[arg(long, value_name = "PATH")]
        mt_align: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Apply target cues to TTS token contours (the PDE modifier).
    Modify {
        /// Token-contour document or directory of them.
        #[arg(long, value_name = "PATH")]
        contours: PathBuf,
        /// Target-cue document or directory pairing the contours by stem.
        #[arg(long, value_name = "PATH")]
        cues: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Data(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = build_config(&cli)?;
    match &cli.command {
        Command::Features { wav_dir, out_dir, fail_fast } => {
            commands::cmd_features(&cfg, cli.jobs, wav_dir, out_dir, *fail_fast)
        }
        Command::Aggregate { ann_dir, out_dir } => {
            commands::cmd_aggregate(&cfg, cli.jobs, ann_dir, out_dir)
        }
        Command::Stats { ann_dir } => commands::cmd_stats(ann_dir),
        Command::Train { features_dir, labels_dir, out } => {
            commands::cmd_train(&cfg, features_dir, labels_dir, out)
        }
        Command::Detect { wav_dir, align_dir, model_file, out_dir } => {
            commands::cmd_detect(&cfg, cli.jobs, wav_dir, align_dir, model_file, out_dir)
        }
        Command::Eval { wav_dir, ann_dir, align_dir, report } => {
            let grid = eval_grid(&cli);
            eval::cmd_eval(&cfg, wav_dir, ann_dir, align_dir, &grid, report.as_deref())
        }
        Command::Transfer { cues, mt_align, out } => commands::cmd_transfer(cues, mt_align, out),
        Command::Modify { contours, cues, out } => {
            commands::cmd_modify(&cfg, contours, cues, out)
        }
    }
}

/// Precedence: flags > config file > defaults.
fn build_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            PipelineConfig::from_json(&bytes)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(window) = &cli.window {
        cfg.features.window = window.parse().expect("validated by clap");
    }
    if let Some(set) = &cli.feature_set {
        cfg.features.feature_set = FeatureSet::parse(set).expect("validated by clap");
    }
    if let Some(family) = &cli.model {
        cfg.model.family = ModelFamily::parse(family).expect("validated by clap");
    }
    if let Some(clamp) = &cli.clamp {
        cfg.clamp = parse_clamp(clamp)?;
    }
    if let Some(scale) = cli.duration_scale {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(CliError::Usage(format!("--duration-scale {scale} must be positive")));
        }
        cfg.duration_scale = scale;
    }
    Ok(cfg)
}

fn parse_clamp(text: &str) -> Result<ScaleBounds, CliError> {
    let usage =
        || CliError::Usage(format!("--clamp '{text}' must be LO:HI with 0 < LO <= HI"));
    let (lo, hi) = text.split_once(':').ok_or_else(usage)?;
    let lo: f64 = lo.trim().parse().map_err(|_| usage())?;
    let hi: f64 = hi.trim().parse().map_err(|_| usage())?;
    let bounds = ScaleBounds { lo, hi };
    bounds.validate().map_err(|_| usage())?;
    Ok(bounds)
}

fn eval_grid(cli: &Cli) -> eval::EvalGrid {
    eval::EvalGrid {
        feature_sets: match cli.feature_set.as_deref().and_then(FeatureSet::parse) {
            Some(set) => vec![set],
            None => vec![FeatureSet::F0Energy, FeatureSet::Full],
        },
        windows: match &cli.window {
            Some(w) => vec![w.parse().expect("validated by clap")],
            None => vec![3, 5, 7],
        },
        families: match cli.model.as_deref().and_then(ModelFamily::parse) {
            Some(f) => vec![f],
            None => vec![ModelFamily::Svc, ModelFamily::Rfc, ModelFamily::Lpa],
        },
    }
}
