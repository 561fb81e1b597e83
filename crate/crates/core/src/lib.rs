//! Stress detection and cross-lingual stress transfer for speech translation
//! pipelines.
//!
//! The crate covers the full chain from source-language audio to modified
//! target-language synthesis contours:
//!
//! 1. [`dsp`] turns audio into per-frame acoustic features (F0, energy,
//!    MFCC, SDC) on a shared frame grid.
//! 2. [`annotation`] aggregates multi-annotator stress regions into gold
//!    frame labels and reports Fleiss kappa agreement.
//! 3. [`classifier`] trains frame-level stress classifiers (SVC, random
//!    forest, label propagation) with SMOTE balancing.
//! 4. [`postprocess`] lifts frame predictions to word-level decisions using
//!    ASR word timestamps and derives pitch/energy scaling factors.
//! 5. [`transfer`] maps stress cues across an MT word alignment.
//! 6. [`pde`] rescales TTS token contours (pitch, duration, energy) for
//!    stressed target words and upsamples by duration.
//!
//! [`io`] holds the file codecs for every artifact exchanged between stages.

pub mod annotation;
pub mod classifier;
pub mod config;
pub mod dsp;
pub mod io;
pub mod pde;
pub mod postprocess;
pub mod rng;
pub mod transfer;

pub use config::PipelineConfig;
pub use dsp::{FeatureMatrix, FeatureSet, FrameConfig, FrameGrid, MfccConfig, PitchConfig, SdcConfig};
pub use io::AudioBuffer;
pub use postprocess::StressCue;
