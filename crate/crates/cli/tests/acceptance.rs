//! Acceptance suite. One test per criterion; each prints a PASS line
//! with its measured numbers on success (visible with --nocapture) and
//! fails loudly otherwise.
//!
//! Criteria 1 and 11 drive the installed binary over generated corpora;
//! the rest exercise the library surfaces directly at their stated
//! tolerances.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use stresskit_core::annotation::{
    fleiss_kappa, AnnotationSet, AnnotatorMarks, StressRegion,
};
use stresskit_core::classifier::{
    evaluate, model_to_bytes, predict, smote_oversample, train, Matrix, ModelConfig,
    ModelFamily, SmoteConfig,
};
use stresskit_core::dsp::{
    assemble_features, compute_mfcc, compute_sdc, estimate_f0, frame_signal, FeatureConfig,
    FeatureMatrix, FeatureSet, FrameConfig, MfccConfig, PitchConfig, SdcConfig,
};
use stresskit_core::io::{
    self, AlignedWord, AudioBuffer, CueDocument, MtAlignment, WordAlignment,
};
use stresskit_core::pde::{apply_cues, upsample_by_duration, TokenContours};
use stresskit_core::postprocess::{
    compute_scaling_factors, word_level_stress, ScaleBounds, StressCue,
};
use stresskit_core::rng::SplitMix64;
use stresskit_core::transfer::{map_cues, TargetCueSet};

fn pass(criterion: u32, message: &str) {
    println!("ACCEPTANCE C{criterion:02} PASS: {message}");
    eprintln!("ACCEPTANCE C{criterion:02} PASS: {message}");
}

// ---------------------------------------------------------------------
// Binary driver
// ---------------------------------------------------------------------

fn stresskit(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_stresskit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stresskit_ok(args: &[&str]) {
    let out = stresskit(args);
    assert!(
        out.status.success(),
        "stresskit {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

// ---------------------------------------------------------------------
// Synthetic corpus: speech-like utterances of harmonic "words" where
// designated stressed words carry +50% pitch and +40% energy.
// ---------------------------------------------------------------------

const SAMPLE_RATE: u32 = 16000;
const WORD_S: f64 = 0.2;
const GAP_S: f64 = 0.05;

struct Corpus {
    stems: Vec<String>,
    /// stem -> injected stressed source-word indices.
    injected: BTreeMap<String, BTreeSet<usize>>,
}

fn dir(root: &Path, name: &str) -> PathBuf {
    let d = root.join(name);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn harmonic_word(samples: &mut Vec<f32>, f0: f64, amp: f64, n: usize) {
    let start = samples.len();
    for i in 0..n {
        let t = (start + i) as f64; // continuous phase across the file
        let phase = 2.0 * std::f64::consts::PI * f0 * t / SAMPLE_RATE as f64;
        let v = amp * (phase.sin() + 0.4 * (2.0 * phase).sin() + 0.2 * (3.0 * phase).sin());
        samples.push(v as f32);
    }
}

fn generate_corpus(
    root: &Path,
    n_files: usize,
    n_speakers: usize,
    words_per_file: usize,
    seed: u64,
) -> Corpus {
    let wav_dir = dir(root, "wav");
    let ann_dir = dir(root, "ann");
    let align_dir = dir(root, "align");
    let mt_dir = dir(root, "mt");
    let contour_dir = dir(root, "contours");

    let mut rng = SplitMix64::new(seed);
    let mut corpus = Corpus { stems: Vec::new(), injected: BTreeMap::new() };
    let word_samples = (WORD_S * SAMPLE_RATE as f64) as usize;
    let gap_samples = (GAP_S * SAMPLE_RATE as f64) as usize;

    for file_index in 0..n_files {
        let speaker = file_index % n_speakers;
        let stem = format!("spk{speaker:02}_{file_index:04}");
        let base_f0 = 110.0 + 10.0 * (speaker % 6) as f64;

        let mut stressed = BTreeSet::new();
        let n_stressed = 1 + rng.gen_index(2);
        while stressed.len() < n_stressed {
            stressed.insert(rng.gen_index(words_per_file));
        }

        let mut samples: Vec<f32> = vec![0.0; gap_samples];
        let mut words = Vec::new();
        for w in 0..words_per_file {
            let start_s = samples.len() as f64 / SAMPLE_RATE as f64;
            let (f0, amp) = if stressed.contains(&w) {
                (base_f0 * 1.5, 0.3 * 1.4)
            } else {
                (base_f0, 0.3)
            };
            harmonic_word(&mut samples, f0, amp, word_samples);
            let end_s = samples.len() as f64 / SAMPLE_RATE as f64;
            words.push(AlignedWord { text: format!("w{w}"), start_s, end_s });
            samples.extend(std::iter::repeat(0.0f32).take(gap_samples));
        }
        let duration_s = samples.len() as f64 / SAMPLE_RATE as f64;

        io::write_wav(
            &wav_dir.join(format!("{stem}.wav")),
            &AudioBuffer { samples, sample_rate: SAMPLE_RATE, audio_id: stem.clone() },
        )
        .unwrap();

        // Three annotators mark the stressed words with small edge jitter.
        let annotations = (0..3)
            .map(|a| AnnotatorMarks {
                annotator_id: format!("a{a}"),
                regions: stressed
                    .iter()
                    .map(|&w| {
                        let jitter = |rng: &mut SplitMix64| (rng.next_f64() - 0.5) * 0.03;
                        let start =
                            (words[w].start_s + jitter(&mut rng)).max(0.0);
                        let end =
                            (words[w].end_s + jitter(&mut rng)).min(duration_s);
                        StressRegion { start_s: start, end_s: end.max(start + 0.05) }
                    })
                    .collect(),
            })
            .collect();
        let set = AnnotationSet {
            audio_id: stem.clone(),
            sample_rate: SAMPLE_RATE,
            duration_s,
            annotations,
        };
        std::fs::write(
            ann_dir.join(format!("{stem}.json")),
            io::serialize_annotation_set(&set),
        )
        .unwrap();

        let alignment = WordAlignment { audio_id: stem.clone(), words };
        std::fs::write(
            align_dir.join(format!("{stem}.json")),
            io::serialize_word_alignment(&alignment),
        )
        .unwrap();

        // MT alignment reverses word order: source i -> target n-1-i.
        let mt = MtAlignment {
            source_words: (0..words_per_file).map(|w| format!("w{w}")).collect(),
            target_words: (0..words_per_file).map(|w| format!("t{w}")).collect(),
            links: (0..words_per_file).map(|w| (w, words_per_file - 1 - w)).collect(),
        };
        std::fs::write(mt_dir.join(format!("{stem}.json")), io::serialize_mt_alignment(&mt))
            .unwrap();

        // Baseline TTS contours: three tokens per target word.
        let mut contours = TokenContours {
            tokens: Vec::new(),
            token_word_index: Vec::new(),
            pitch: Vec::new(),
            energy: Vec::new(),
            duration: Vec::new(),
        };
        for j in 0..words_per_file {
            for k in 0..3 {
                contours.tokens.push(format!("t{j}_{k}"));
                contours.token_word_index.push(j);
                contours.pitch.push(1.0 + 0.25 * j as f64 + 0.05 * k as f64);
                contours.energy.push(0.4 + 0.03 * j as f64 + 0.01 * k as f64);
                contours.duration.push(2.0 + ((j + k) % 3) as f64 * 0.5);
            }
        }
        std::fs::write(
            contour_dir.join(format!("{stem}.json")),
            io::serialize_token_contours(&contours),
        )
        .unwrap();

        corpus.injected.insert(stem.clone(), stressed);
        corpus.stems.push(stem);
    }
    corpus
}

// ---------------------------------------------------------------------
// Criterion 1: paper-number reproducibility statement + report shape
// ---------------------------------------------------------------------

#[test]
fn criterion_01_eval_emits_table_shaped_report() {
    // The published accuracies (e.g. 82.3 / 80.77 / 90.36 for label
    // propagation on all features, window 7) cannot be checked here: the
    // annotated lecture corpus is not distributed and the split/SMOTE
    // protocols are unstated. The harness must still produce the full
    // features x window x model report.
    let tmp = tempfile::tempdir().unwrap();
    generate_corpus(tmp.path(), 10, 5, 4, 404);
    let report = tmp.path().join("report.json");
    stresskit_ok(&[
        "eval",
        "--wav-dir",
        tmp.path().join("wav").to_str().unwrap(),
        "--ann-dir",
        tmp.path().join("ann").to_str().unwrap(),
        "--align-dir",
        tmp.path().join("align").to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--seed",
        "11",
    ]);

    let value: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    let rows = value["rows"].as_array().expect("rows array");
    assert_eq!(rows.len(), 18, "2 feature sets x 3 windows x 3 models");
    let mut combos = BTreeSet::new();
    for row in rows {
        let features = row["features"].as_str().unwrap().to_string();
        let window = row["window"].as_u64().unwrap();
        let model = row["model"].as_str().unwrap().to_string();
        assert!(["f0e", "full"].contains(&features.as_str()));
        assert!([3, 5, 7].contains(&window));
        assert!(["svc", "rfc", "lpa"].contains(&model.as_str()));
        for metric in ["accuracy", "f1", "post_accuracy"] {
            let v = row[metric].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&v), "{metric} = {v}");
        }
        combos.insert((features, window, model));
    }
    assert_eq!(combos.len(), 18, "all combinations distinct");
    pass(
        1,
        "eval emits the full 18-row features x window x model report; \
         published corpus numbers are not desk-reproducible (corpus and \
         split/SMOTE protocol unavailable) and are replaced by the \
         property criteria below",
    );
}

// ---------------------------------------------------------------------
// Criterion 2: DSP oracle suite
// ---------------------------------------------------------------------

mod dft_reference {
    /// The MFCC pipeline recomputed around a naive DFT, written
    /// independently of the crate's FFT path.
    pub fn mfcc_rows(frames: &[Vec<f64>], sample_rate: u32, n_mels: usize) -> Vec<Vec<f64>> {
        let frame_len = frames.first().map_or(0, |f| f.len());
        let mut fft_size = 1usize;
        while fft_size < frame_len {
            fft_size *= 2;
        }
        let nyquist = sample_rate as f64 / 2.0;
        frames
            .iter()
            .map(|frame| {
                let windowed: Vec<f64> = frame
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        x * (0.5
                            - 0.5
                                * (2.0 * std::f64::consts::PI * i as f64 / frame_len as f64)
                                    .cos())
                    })
                    .collect();
                let spectrum: Vec<f64> = (0..=fft_size / 2)
                    .map(|k| {
                        let mut re = 0.0;
                        let mut im = 0.0;
                        for (n, &x) in windowed.iter().enumerate() {
                            let ang = -2.0 * std::f64::consts::PI * (k * n) as f64
                                / fft_size as f64;
                            re += x * ang.cos();
                            im += x * ang.sin();
                        }
                        (re * re + im * im).sqrt()
                    })
                    .collect();

                let mel = |hz: f64| 2595.0 * (1.0 + hz / 700.0).log10();
                let inv = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
                let edges: Vec<f64> = (0..n_mels + 2)
                    .map(|i| inv(mel(0.0) + (mel(nyquist) - mel(0.0)) * i as f64 / (n_mels + 1) as f64))
                    .collect();
                let log_mel: Vec<f64> = (0..n_mels)
                    .map(|m| {
                        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                        let e: f64 = spectrum
                            .iter()
                            .enumerate()
                            .map(|(k, &s)| {
                                let f = k as f64 * sample_rate as f64 / fft_size as f64;
                                let w = if f > lo && f < hi {
                                    if f <= center {
                                        (f - lo) / (center - lo)
                                    } else {
                                        (hi - f) / (hi - center)
                                    }
                                } else {
                                    0.0
                                };
                                w * s
                            })
                            .sum();
                        e.max(1e-10).ln()
                    })
                    .collect();

                let m = n_mels as f64;
                (0..13)
                    .map(|k| {
                        let scale =
                            if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
                        scale
                            * log_mel
                                .iter()
                                .enumerate()
                                .map(|(i, &x)| {
                                    x * (std::f64::consts::PI
                                        * k as f64
                                        * (2.0 * i as f64 + 1.0)
                                        / (2.0 * m))
                                        .cos()
                                })
                                .sum::<f64>()
                    })
                    .collect()
            })
            .collect()
    }
}

#[test]
fn criterion_02_dsp_oracle_suite() {
    let started = Instant::now();
    let frame_cfg = FrameConfig::default();

    // MFCC vs naive-DFT reference on 10 random 1 s signals.
    let mut rng = SplitMix64::new(909);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let samples: Vec<f32> =
            (0..16000).map(|_| (rng.next_f64() * 1.6 - 0.8) as f32).collect();
        let audio =
            AudioBuffer { samples, sample_rate: 16000, audio_id: "noise".into() };
        let frames = frame_signal(&audio, &frame_cfg).unwrap();
        let ours = compute_mfcc(&frames, &frame_cfg, &MfccConfig::default());
        let reference = dft_reference::mfcc_rows(&frames, 16000, 40);
        for (a, b) in ours.iter().zip(reference.iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    assert!(worst < 1e-4, "MFCC max abs diff {worst}");

    // F0 of pure tones at 100, 220, 330 Hz.
    for target in [100.0f64, 220.0, 330.0] {
        let samples: Vec<f32> = (0..16000)
            .map(|i| {
                (0.8 * (2.0 * std::f64::consts::PI * target * i as f64 / 16000.0).sin()) as f32
            })
            .collect();
        let audio = AudioBuffer { samples, sample_rate: 16000, audio_id: "tone".into() };
        let f0 = estimate_f0(&audio, &frame_cfg, &PitchConfig::default()).unwrap();
        let voiced: Vec<f64> = f0.iter().copied().filter(|&v| v > 0.0).collect();
        assert!(voiced.len() * 10 >= f0.len() * 9, "{target} Hz: voicing below 90%");
        let close = voiced.iter().filter(|&&v| (v - target).abs() <= 5.0).count();
        assert!(
            close * 10 >= voiced.len() * 9,
            "{target} Hz: {close}/{} within 5 Hz",
            voiced.len()
        );
    }

    // SDC of constant MFCC is exactly zero.
    let sdc = compute_sdc(&vec![vec![3.25; 13]; 50], &SdcConfig::default());
    assert!(sdc.iter().flatten().all(|&v| v == 0.0));

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}");
    pass(2, &format!("MFCC max diff {worst:.2e}, tones within 5 Hz, SDC zero ({elapsed:?})"));
}

// ---------------------------------------------------------------------
// Criterion 3: dimensional contract
// ---------------------------------------------------------------------

#[test]
fn criterion_03_dimensional_contract() {
    let started = Instant::now();
    let samples: Vec<f32> = (0..8000)
        .map(|i| (0.5 * (2.0 * std::f64::consts::PI * 150.0 * i as f64 / 16000.0).sin()) as f32)
        .collect();
    let audio = AudioBuffer { samples, sample_rate: 16000, audio_id: "dim".into() };

    for window in [3usize, 5, 7] {
        let f0e = FeatureConfig {
            feature_set: FeatureSet::F0Energy,
            window,
            ..FeatureConfig::default()
        };
        assert_eq!(assemble_features(&audio, &f0e).unwrap().matrix.n_cols, 2 * window);
        let full =
            FeatureConfig { feature_set: FeatureSet::Full, window, ..FeatureConfig::default() };
        assert_eq!(assemble_features(&audio, &full).unwrap().matrix.n_cols, 67 * window);
    }

    let full7 = FeatureConfig::default();
    assert_eq!(full7.window, 7);
    assert_eq!(assemble_features(&audio, &full7).unwrap().matrix.n_cols, 469);

    let sdc = compute_sdc(&vec![vec![0.0; 13]; 4], &SdcConfig::default());
    assert_eq!(sdc[0].len(), 52);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 1, "took {elapsed:?}");
    pass(3, &format!("widths 2w and 67w for w in {{3,5,7}}; 469 full/7; 52 SDC ({elapsed:?})"));
}

// ---------------------------------------------------------------------
// Criterion 4: classifier sanity on Gaussian blobs
// ---------------------------------------------------------------------

fn blobs(n_per_class: usize, dims: usize, separation: f64, seed: u64) -> (Matrix, Vec<bool>) {
    let mut rng = SplitMix64::new(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2 {
        let offset = if class == 0 { 0.0 } else { separation };
        for _ in 0..n_per_class {
            rows.push((0..dims).map(|_| offset + rng.next_gaussian()).collect::<Vec<f64>>());
            labels.push(class == 1);
        }
    }
    (Matrix::from_rows(rows), labels)
}

fn as_features(x: &Matrix, digest: [u8; 32]) -> FeatureMatrix {
    FeatureMatrix::new(x.rows, x.cols, x.data.iter().map(|&v| v as f32).collect(), digest)
}

#[test]
fn criterion_04_classifier_sanity() {
    let started = Instant::now();
    // Disjoint generator seeds play the role of disjoint speakers.
    let (train_x, train_y) = blobs(200, 4, 10.0, 1001);
    let (test_x, test_y) = blobs(100, 4, 10.0, 2002);
    let train_f = as_features(&train_x, [7u8; 32]);
    let test_f = as_features(&test_x, [7u8; 32]);

    let mut summary = String::new();
    for family in [ModelFamily::Svc, ModelFamily::Rfc, ModelFamily::Lpa] {
        let cfg = ModelConfig { family, rng_seed: 31, ..ModelConfig::default() };
        let model = train(&train_f, &train_y, &cfg, None).unwrap();
        let again = train(&train_f, &train_y, &cfg, None).unwrap();
        assert_eq!(
            model_to_bytes(&model),
            model_to_bytes(&again),
            "{} not deterministic",
            family.as_str()
        );
        let (pred, _) = predict(&model, &test_f).unwrap();
        let metrics = evaluate(&pred, &test_y).unwrap();
        assert!(
            metrics.accuracy >= 0.95,
            "{} accuracy {}",
            family.as_str(),
            metrics.accuracy
        );
        summary.push_str(&format!("{}={:.3} ", family.as_str(), metrics.accuracy));
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    pass(4, &format!("test accuracy {summary}({elapsed:?})"));
}

// ---------------------------------------------------------------------
// Criterion 5: SMOTE properties
// ---------------------------------------------------------------------

#[test]
fn criterion_05_smote_properties() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(550);
    let minority_n = 12;
    let majority_n = 40;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..minority_n {
        rows.push(vec![rng.next_gaussian(), rng.next_gaussian()]);
        labels.push(true);
    }
    for _ in 0..majority_n {
        rows.push(vec![8.0 + rng.next_gaussian(), 8.0 + rng.next_gaussian()]);
        labels.push(false);
    }
    let x = Matrix::from_rows(rows);
    let cfg = SmoteConfig { k_neighbors: 5, target_ratio: 1.0, rng_seed: 913 };
    let out = smote_oversample(&x, &labels, &cfg).unwrap();

    // Ratio within +-1 sample of the target.
    let pos = out.labels.iter().filter(|&&l| l).count();
    let neg = out.labels.len() - pos;
    assert!((pos as i64 - (neg as f64 * cfg.target_ratio).round() as i64).abs() <= 1);

    // Every synthetic point is a convex combination of two minority
    // originals (residual < 1e-9).
    let minority_rows: Vec<&[f64]> =
        (0..x.rows).filter(|&r| labels[r]).map(|r| x.row(r)).collect();
    for r in x.rows..out.features.rows {
        let s = out.features.row(r);
        let mut best = f64::INFINITY;
        for a in &minority_rows {
            for b in &minority_rows {
                let Some(j) = (0..2).find(|&j| (b[j] - a[j]).abs() > 1e-12) else {
                    continue;
                };
                let u = (s[j] - a[j]) / (b[j] - a[j]);
                if !(0.0..=1.0).contains(&u) {
                    continue;
                }
                let residual: f64 =
                    (0..2).map(|j| (a[j] + u * (b[j] - a[j]) - s[j]).abs()).sum();
                best = best.min(residual);
            }
        }
        assert!(best < 1e-9, "synthetic row {r} residual {best}");
    }

    // Bit-identical under a fixed seed.
    let again = smote_oversample(&x, &labels, &cfg).unwrap();
    let bits = |m: &Matrix| m.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&out.features), bits(&again.features));
    assert_eq!(out.labels, again.labels);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 5, "took {elapsed:?}");
    pass(5, &format!("{} synthetics, ratio exact, residuals < 1e-9 ({elapsed:?})", out.synthesized));
}

// ---------------------------------------------------------------------
// Criterion 6: frame-to-word brute-force equivalence
// ---------------------------------------------------------------------

#[test]
fn criterion_06_word_majority_brute_force() {
    let started = Instant::now();
    let cfg = FrameConfig::default();
    let mut rng = SplitMix64::new(660);

    for fixture in 0..500 {
        let n_frames = 1 + rng.gen_index(200);
        // Back out a sample count that produces this frame count.
        let n_samples = cfg.frame_len + (n_frames - 1) * cfg.hop;
        let grid = cfg.grid_for_len(n_samples);
        assert_eq!(grid.n_frames, n_frames);
        let duration = n_samples as f64 / cfg.sample_rate as f64;

        let n_words = 1 + rng.gen_index(20);
        let mut words = Vec::new();
        let mut clock = rng.next_f64() * 0.05;
        for w in 0..n_words {
            let len = 0.02 + rng.next_f64() * (duration / n_words as f64);
            let start = clock;
            let end = (start + len).min(duration + 0.5);
            words.push(AlignedWord { text: format!("w{w}"), start_s: start, end_s: end });
            clock = end + rng.next_f64() * 0.05;
        }
        let alignment = WordAlignment { audio_id: "fixture".into(), words };
        let preds: Vec<bool> = (0..n_frames).map(|_| rng.next_f64() < 0.4).collect();

        let decisions = word_level_stress(&preds, &alignment, &grid).unwrap();

        // Naive per-frame membership counter, strict majority.
        for (i, word) in alignment.words.iter().enumerate() {
            let mut inside = 0usize;
            let mut stressed = 0usize;
            for t in 0..n_frames {
                let center =
                    (cfg.hop * t + cfg.frame_len / 2) as f64 / cfg.sample_rate as f64;
                if center >= word.start_s && center < word.end_s {
                    inside += 1;
                    if preds[t] {
                        stressed += 1;
                    }
                }
            }
            let expected = inside > 0 && 2 * stressed > inside;
            assert_eq!(decisions[i].stressed, expected, "fixture {fixture}, word {i}");
            if inside > 0 {
                let expected_fraction = stressed as f64 / inside as f64;
                assert_eq!(decisions[i].stressed_frame_fraction, expected_fraction);
            }
        }
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}");
    pass(6, &format!("500 fixtures match the naive counter exactly ({elapsed:?})"));
}

// ---------------------------------------------------------------------
// Criterion 7: Fleiss kappa
// ---------------------------------------------------------------------

#[test]
fn criterion_07_fleiss_kappa() {
    let started = Instant::now();

    let mut unanimous = vec![vec![3usize, 0]; 6];
    unanimous.extend(vec![vec![0usize, 3]; 4]);
    assert_eq!(fleiss_kappa(&unanimous).unwrap(), 1.0);

    let k = fleiss_kappa(&[vec![1, 1], vec![1, 1]]).unwrap();
    assert!((k - (-1.0)).abs() < 1e-12, "kappa {k}");

    let k = fleiss_kappa(&[vec![3, 0], vec![2, 1], vec![0, 3]]).unwrap();
    assert!((k - 0.55).abs() < 1e-12, "kappa {k}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_millis() < 1000, "took {elapsed:?}");
    pass(7, &format!("unanimous = 1.0 exactly, hand values -1.0 and 0.55 to 1e-12 ({elapsed:?})"));
}

// ---------------------------------------------------------------------
// Criterion 8: scaling factors
// ---------------------------------------------------------------------

#[test]
fn criterion_08_scaling_factors() {
    let started = Instant::now();
    let bounds = ScaleBounds { lo: 0.5, hi: 2.0 };

    let n = 120;
    let range = 40..70;
    let f0: Vec<f64> = (0..n).map(|t| if range.contains(&t) { 150.0 } else { 100.0 }).collect();
    let energy = vec![0.25; n];
    let (p, e, _) =
        compute_scaling_factors(&f0, &energy, range.clone(), &bounds, 1.0).unwrap();
    assert!((p - 1.5).abs() < 1e-9, "pitch scale {p}");
    assert_eq!(e, 1.0);

    // Ratio invariance under global contour scaling.
    let f0_scaled: Vec<f64> = f0.iter().map(|v| v * 7.5).collect();
    let energy_scaled: Vec<f64> = energy.iter().map(|v| v * 0.2).collect();
    let (p2, e2, _) =
        compute_scaling_factors(&f0_scaled, &energy_scaled, range.clone(), &bounds, 1.0).unwrap();
    assert!((p - p2).abs() < 1e-12);
    assert!((e - e2).abs() < 1e-12);

    // Clamp respected at [0.5, 2.0].
    let f0_hot: Vec<f64> =
        (0..n).map(|t| if range.contains(&t) { 300.0 } else { 100.0 }).collect();
    let (p3, _, _) = compute_scaling_factors(&f0_hot, &energy, range.clone(), &bounds, 1.0).unwrap();
    assert_eq!(p3, 2.0);
    let energy_cold: Vec<f64> =
        (0..n).map(|t| if range.contains(&t) { 0.01 } else { 0.5 }).collect();
    let (_, e3, _) = compute_scaling_factors(&f0, &energy_cold, range, &bounds, 1.0).unwrap();
    assert_eq!(e3, 0.5);

    let elapsed = started.elapsed();
    assert!(elapsed.as_millis() < 1000, "took {elapsed:?}");
    pass(8, &format!("ratio 1.5 within 1e-9, scale-invariant, clamps at [0.5, 2.0] ({elapsed:?})"));
}

// ---------------------------------------------------------------------
// Criterion 9: PDE modifier
// ---------------------------------------------------------------------

#[test]
fn criterion_09_pde_modifier() {
    let started = Instant::now();

    // Unit-scale identity on integer durations.
    let contours = TokenContours {
        tokens: vec!["a".into(), "b".into(), "c".into()],
        token_word_index: vec![0, 1, 2],
        pitch: vec![1.5, 2.5, 0.75],
        energy: vec![0.4, 0.5, 0.6],
        duration: vec![2.0, 3.0, 1.0],
    };
    let unit_cues = TargetCueSet {
        cues: vec![StressCue {
            word_index: 1,
            word: "t1".into(),
            pitch_scale: 1.0,
            energy_scale: 1.0,
            duration_scale: 1.0,
        }],
        unmapped_sources: vec![],
    };
    let out = apply_cues(&contours, &unit_cues).unwrap();
    assert_eq!(out.pitch, contours.pitch);
    assert_eq!(out.energy, contours.energy);
    assert_eq!(out.duration, vec![2, 3, 1]);

    // Worked example: (2.0, 0.5, 4) under scales (1.5, 1.2, 1.25).
    let single = TokenContours {
        tokens: vec!["x".into()],
        token_word_index: vec![0],
        pitch: vec![2.0],
        energy: vec![0.5],
        duration: vec![4.0],
    };
    let cue = TargetCueSet {
        cues: vec![StressCue {
            word_index: 0,
            word: "t0".into(),
            pitch_scale: 1.5,
            energy_scale: 1.2,
            duration_scale: 1.25,
        }],
        unmapped_sources: vec![],
    };
    let out = apply_cues(&single, &cue).unwrap();
    assert_eq!(out.pitch, vec![3.0]);
    assert!((out.energy[0] - 0.6).abs() < 1e-15);
    assert_eq!(out.duration, vec![5]);

    // Upsampled length equals the duration sum on 1000 random fixtures,
    // against a naive repetition oracle.
    let mut rng = SplitMix64::new(990);
    for fixture in 0..1000 {
        let n = rng.gen_index(30);
        let values: Vec<f64> = (0..n).map(|_| rng.next_f64() * 10.0 - 5.0).collect();
        let durations: Vec<i64> = (0..n).map(|_| rng.gen_index(9) as i64).collect();
        let up = upsample_by_duration(&values, &durations).unwrap();
        let total: i64 = durations.iter().sum();
        assert_eq!(up.len() as i64, total, "fixture {fixture}");
        let mut oracle = Vec::new();
        for (&v, &d) in values.iter().zip(durations.iter()) {
            for _ in 0..d {
                oracle.push(v);
            }
        }
        assert_eq!(up, oracle, "fixture {fixture}");
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 5, "took {elapsed:?}");
    pass(9, &format!("identity, worked example exact, 1000 upsample fixtures ({elapsed:?})"));
}

// ---------------------------------------------------------------------
// Criterion 10: cue transfer
// ---------------------------------------------------------------------

#[test]
fn criterion_10_cue_transfer() {
    let started = Instant::now();

    let cue = |i: usize, p: f64| StressCue {
        word_index: i,
        word: format!("s{i}"),
        pitch_scale: p,
        energy_scale: 1.0 + p / 10.0,
        duration_scale: 1.0,
    };

    // Identity-alignment idempotence.
    let identity = MtAlignment {
        source_words: (0..5).map(|i| format!("s{i}")).collect(),
        target_words: (0..5).map(|i| format!("t{i}")).collect(),
        links: (0..5).map(|i| (i, i)).collect(),
    };
    let cues = vec![cue(1, 1.4), cue(3, 1.8)];
    let out = map_cues(&cues, &identity).unwrap();
    assert_eq!(out.cues.len(), 2);
    for (mapped, source) in out.cues.iter().zip(cues.iter()) {
        assert_eq!(mapped.word_index, source.word_index);
        assert_eq!(mapped.pitch_scale, source.pitch_scale);
        assert_eq!(mapped.energy_scale, source.energy_scale);
    }
    assert!(out.unmapped_sources.is_empty());

    // Many-to-one max merge: sources 1 (1.4) and 2 (1.2) on target 3.
    let many_to_one = MtAlignment {
        source_words: (0..4).map(|i| format!("s{i}")).collect(),
        target_words: (0..4).map(|i| format!("t{i}")).collect(),
        links: vec![(1, 3), (2, 3)],
    };
    let out = map_cues(&[cue(1, 1.4), cue(2, 1.2)], &many_to_one).unwrap();
    assert_eq!(out.cues.len(), 1);
    assert_eq!(out.cues[0].word_index, 3);
    assert_eq!(out.cues[0].pitch_scale, 1.4);

    // Conservation on random alignments: every stressed source appears
    // in a target cue's links or in unmapped_sources.
    let mut rng = SplitMix64::new(1010);
    for fixture in 0..300 {
        let n_src = 2 + rng.gen_index(8);
        let n_tgt = 2 + rng.gen_index(8);
        let n_links = rng.gen_index(12);
        let links: Vec<(usize, usize)> = (0..n_links)
            .map(|_| (rng.gen_index(n_src), rng.gen_index(n_tgt)))
            .collect();
        let alignment = MtAlignment {
            source_words: (0..n_src).map(|i| format!("s{i}")).collect(),
            target_words: (0..n_tgt).map(|i| format!("t{i}")).collect(),
            links: links.clone(),
        };
        let mut source_indices: Vec<usize> =
            (0..1 + rng.gen_index(n_src)).map(|_| rng.gen_index(n_src)).collect();
        source_indices.sort_unstable();
        source_indices.dedup();
        let cues: Vec<StressCue> = source_indices
            .iter()
            .map(|&i| cue(i, 1.0 + rng.next_f64()))
            .collect();

        let out = map_cues(&cues, &alignment).unwrap();
        for c in &cues {
            let has_link = links.iter().any(|&(s, _)| s == c.word_index);
            if has_link {
                for &(s, t) in &links {
                    if s == c.word_index {
                        assert!(
                            out.cues.iter().any(|tc| tc.word_index == t),
                            "fixture {fixture}: target {t} missing"
                        );
                    }
                }
                assert!(!out.unmapped_sources.contains(&c.word_index));
            } else {
                assert!(
                    out.unmapped_sources.contains(&c.word_index),
                    "fixture {fixture}: source {} dropped silently",
                    c.word_index
                );
            }
        }
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 5, "took {elapsed:?}");
    pass(10, &format!("identity, max-merge, conservation on 300 alignments ({elapsed:?})"));
}

// ---------------------------------------------------------------------
// Criterion 11: end-to-end synthetic pipeline
// ---------------------------------------------------------------------

#[test]
fn criterion_11_end_to_end_pipeline() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let corpus = generate_corpus(root, 50, 10, 5, 1111);

    let path = |name: &str| root.join(name).to_str().unwrap().to_string();
    stresskit_ok(&["features", "--wav-dir", &path("wav"), "--out-dir", &path("feats")]);
    stresskit_ok(&["aggregate", "--ann-dir", &path("ann"), "--out-dir", &path("labels")]);
    stresskit_ok(&[
        "train",
        "--features-dir",
        &path("feats"),
        "--labels-dir",
        &path("labels"),
        "--out",
        &path("model.json"),
    ]);
    stresskit_ok(&[
        "detect",
        "--wav-dir",
        &path("wav"),
        "--align-dir",
        &path("align"),
        "--model-file",
        &path("model.json"),
        "--out-dir",
        &path("cues"),
    ]);

    // Word-level recall and precision of the injected stressed words.
    let mut hits = 0usize;
    let mut detected_total = 0usize;
    let mut injected_total = 0usize;
    for stem in &corpus.stems {
        let doc = io::parse_stress_cues(
            &std::fs::read(root.join("cues").join(format!("{stem}.json"))).unwrap(),
        )
        .unwrap();
        let detected: BTreeSet<usize> = doc.cues.iter().map(|c| c.word_index).collect();
        let injected = &corpus.injected[stem];
        hits += detected.intersection(injected).count();
        detected_total += detected.len();
        injected_total += injected.len();
    }
    let recall = hits as f64 / injected_total as f64;
    let precision = if detected_total > 0 { hits as f64 / detected_total as f64 } else { 0.0 };
    assert!(recall >= 0.9, "recall {recall} ({hits}/{injected_total})");
    assert!(precision >= 0.8, "precision {precision} ({hits}/{detected_total})");

    stresskit_ok(&[
        "transfer",
        "--cues",
        &path("cues"),
        "--mt-align",
        &path("mt"),
        "--out",
        &path("target_cues"),
    ]);
    stresskit_ok(&[
        "modify",
        "--contours",
        &path("contours"),
        "--cues",
        &path("target_cues"),
        "--out",
        &path("modified"),
    ]);

    // Cued-token pitch ratio to baseline must equal the emitted
    // (clamped) pitch scale within 1e-6; uncued tokens stay untouched.
    let mut checked_tokens = 0usize;
    for stem in &corpus.stems {
        let baseline = io::parse_token_contours(
            &std::fs::read(root.join("contours").join(format!("{stem}.json"))).unwrap(),
        )
        .unwrap();
        let target_cues: CueDocument = io::parse_stress_cues(
            &std::fs::read(root.join("target_cues").join(format!("{stem}.json"))).unwrap(),
        )
        .unwrap();
        let modified = io::parse_modified_contours(
            &std::fs::read(root.join("modified").join(format!("{stem}.json"))).unwrap(),
        )
        .unwrap();

        let cue_for = |word: usize| target_cues.cues.iter().find(|c| c.word_index == word);
        for (i, &word) in baseline.token_word_index.iter().enumerate() {
            match cue_for(word) {
                Some(c) => {
                    assert!(
                        (c.pitch_scale - ScaleBounds::default().clamp(c.pitch_scale)).abs() == 0.0,
                        "emitted cue is not clamped"
                    );
                    let ratio = modified.pitch[i] / baseline.pitch[i];
                    assert!(
                        (ratio - c.pitch_scale).abs() < 1e-6,
                        "{stem} token {i}: ratio {ratio} vs scale {}",
                        c.pitch_scale
                    );
                    checked_tokens += 1;
                }
                None => {
                    assert_eq!(modified.pitch[i], baseline.pitch[i]);
                    assert_eq!(modified.energy[i], baseline.energy[i]);
                }
            }
        }
    }
    assert!(checked_tokens > 0, "no cued tokens were checked");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 300, "took {elapsed:?}");
    pass(
        11,
        &format!(
            "recall {recall:.3}, precision {precision:.3}, {checked_tokens} cued tokens \
             at exact pitch ratio ({elapsed:?})"
        ),
    );
}
