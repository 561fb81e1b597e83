//! F0 estimation by normalized autocorrelation.
//!
//! Per frame: remove the frame mean, compute the normalized
//! cross-correlation over lags covering [f0_min, f0_max], and take the
//! first qualifying correlation peak (which avoids octave-halving on
//! strongly periodic frames). Unvoiced frames report 0.0.

use super::{frame_signal, FrameConfig, PitchConfig};
use crate::io::AudioBuffer;

use super::DspError;

/// Fraction of the global peak a lower-lag peak must reach to win.
const PEAK_CANDIDATE_RATIO: f64 = 0.85;

/// Per-frame F0 contour in Hz, aligned to the frame grid. Unvoiced
/// frames are 0.0; voiced values are clamped to [f0_min, f0_max].
pub fn estimate_f0(
    audio: &AudioBuffer,
    frame_cfg: &FrameConfig,
    cfg: &PitchConfig,
) -> Result<Vec<f64>, DspError> {
    cfg.validate(frame_cfg.sample_rate)?;
    let frames = frame_signal(audio, frame_cfg)?;
    let sr = frame_cfg.sample_rate as f64;
    let lag_min = ((sr / cfg.f0_max).floor() as usize).max(1);
    let lag_max = ((sr / cfg.f0_min).ceil() as usize).min(frame_cfg.frame_len - 1);

    Ok(frames
        .iter()
        .map(|frame| frame_f0(frame, sr, lag_min, lag_max, cfg))
        .collect())
}

fn frame_f0(frame: &[f64], sr: f64, lag_min: usize, lag_max: usize, cfg: &PitchConfig) -> f64 {
    if lag_min >= lag_max {
        return 0.0;
    }
    let n = frame.len();
    let mean = frame.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = frame.iter().map(|v| v - mean).collect();

    let power: f64 = x.iter().map(|v| v * v).sum();
    if power <= f64::EPSILON {
        return 0.0;
    }

    // Normalized cross-correlation per lag. The denominator uses the two
    // actual overlapping segments so long lags are not biased downward.
    let mut ncc = vec![0.0; lag_max + 1];
    for lag in lag_min..=lag_max {
        let m = n - lag;
        let mut num = 0.0;
        let mut e0 = 0.0;
        let mut e1 = 0.0;
        for i in 0..m {
            num += x[i] * x[i + lag];
            e0 += x[i] * x[i];
            e1 += x[i + lag] * x[i + lag];
        }
        let denom = (e0 * e1).sqrt();
        if denom > 0.0 {
            ncc[lag] = num / denom;
        }
    }

    let global_peak = ncc[lag_min..=lag_max].iter().cloned().fold(f64::MIN, f64::max);
    if global_peak < cfg.voicing_threshold {
        return 0.0;
    }

    let candidate_floor = (global_peak * PEAK_CANDIDATE_RATIO).max(cfg.voicing_threshold);
    let mut best_lag = None;
    for lag in lag_min..=lag_max {
        let left = if lag > lag_min { ncc[lag - 1] } else { f64::MIN };
        let right = if lag < lag_max { ncc[lag + 1] } else { f64::MIN };
        if ncc[lag] >= candidate_floor && ncc[lag] >= left && ncc[lag] >= right {
            best_lag = Some(lag);
            break;
        }
    }
    let Some(lag) = best_lag else { return 0.0 };

    // Parabolic interpolation around the integer peak.
    let refined = if lag > lag_min && lag < lag_max {
        let (a, b, c) = (ncc[lag - 1], ncc[lag], ncc[lag + 1]);
        let denom = a - 2.0 * b + c;
        if denom.abs() > f64::EPSILON {
            lag as f64 + 0.5 * (a - c) / denom
        } else {
            lag as f64
        }
    } else {
        lag as f64
    };

    (sr / refined).clamp(cfg.f0_min, cfg.f0_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, sr: u32, seconds: f64, amp: f64) -> AudioBuffer {
        let n = (sr as f64 * seconds) as usize;
        let samples: Vec<f32> = (0..n)
            .map(|i| (amp * (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin()) as f32)
            .collect();
        AudioBuffer { samples, sample_rate: sr, audio_id: "tone".into() }
    }

    fn voiced_accuracy(f0: &[f64], target: f64, tol: f64) -> (f64, f64) {
        let voiced: Vec<f64> = f0.iter().cloned().filter(|&v| v > 0.0).collect();
        let frac_voiced = voiced.len() as f64 / f0.len() as f64;
        let frac_close =
            voiced.iter().filter(|&&v| (v - target).abs() <= tol).count() as f64
                / voiced.len().max(1) as f64;
        (frac_voiced, frac_close)
    }

    #[test]
    fn pure_220hz_tone() {
        let audio = tone(220.0, 16000, 1.0, 0.8);
        let f0 = estimate_f0(&audio, &FrameConfig::default(), &PitchConfig::default()).unwrap();
        let (voiced, close) = voiced_accuracy(&f0, 220.0, 5.0);
        assert!(voiced >= 0.9, "only {voiced} voiced");
        assert!(close >= 0.9, "only {close} within 5 Hz");
    }

    #[test]
    fn pure_100hz_tone_median() {
        let audio = tone(100.0, 16000, 1.0, 0.5);
        let f0 = estimate_f0(&audio, &FrameConfig::default(), &PitchConfig::default()).unwrap();
        let mut voiced: Vec<f64> = f0.into_iter().filter(|&v| v > 0.0).collect();
        assert!(!voiced.is_empty());
        voiced.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = voiced[voiced.len() / 2];
        assert!((median - 100.0).abs() <= 5.0, "median {median}");
    }

    #[test]
    fn silence_is_unvoiced() {
        let audio = AudioBuffer {
            samples: vec![0.0; 16000],
            sample_rate: 16000,
            audio_id: "silence".into(),
        };
        let f0 = estimate_f0(&audio, &FrameConfig::default(), &PitchConfig::default()).unwrap();
        assert!(f0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn voiced_values_stay_in_band() {
        let audio = tone(390.0, 16000, 0.5, 0.9);
        let cfg = PitchConfig::default();
        let f0 = estimate_f0(&audio, &FrameConfig::default(), &cfg).unwrap();
        for v in f0 {
            assert!(v == 0.0 || (cfg.f0_min..=cfg.f0_max).contains(&v));
        }
    }
}
