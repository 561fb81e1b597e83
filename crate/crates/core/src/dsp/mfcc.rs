//! Mel-frequency cepstral coefficients.
//!
//! Pipeline per frame: periodic Hann window, magnitude spectrum (frame
//! zero-padded to the next power of two), triangular mel filterbank,
//! log with a 1e-10 floor, orthonormal DCT-II, keep the first
//! `n_coeffs` coefficients.

use super::fft::magnitude_spectrum;
use super::{FrameConfig, MfccConfig};

const LOG_FLOOR: f64 = 1e-10;

pub(crate) fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub(crate) fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filterbank as a dense (n_mels x n_bins) weight matrix.
fn mel_filterbank(cfg: &MfccConfig, sample_rate: u32, fft_size: usize) -> Vec<Vec<f64>> {
    let nyquist = sample_rate as f64 / 2.0;
    let fmax = cfg.fmax.unwrap_or(nyquist);
    let mel_lo = hz_to_mel(cfg.fmin);
    let mel_hi = hz_to_mel(fmax);
    let n_bins = fft_size / 2 + 1;
    let bin_hz = sample_rate as f64 / fft_size as f64;

    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();

    let mut bank = vec![vec![0.0; n_bins]; cfg.n_mels];
    for (m, filter) in bank.iter_mut().enumerate() {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for (k, w) in filter.iter_mut().enumerate() {
            let f = k as f64 * bin_hz;
            if f > lo && f < hi {
                *w = if f <= center {
                    (f - lo) / (center - lo)
                } else {
                    (hi - f) / (hi - center)
                };
            }
        }
    }
    bank
}

fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Orthonormal DCT-II of `input`, truncated to `n_out` coefficients.
fn dct_ii_ortho(input: &[f64], n_out: usize) -> Vec<f64> {
    let m = input.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            let sum: f64 = input
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    x * (std::f64::consts::PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * m)).cos()
                })
                .sum();
            scale * sum
        })
        .collect()
}

/// MFCC rows for every frame; each row has `cfg.n_coeffs` values.
pub fn compute_mfcc(
    frames: &[Vec<f64>],
    frame_cfg: &FrameConfig,
    cfg: &MfccConfig,
) -> Vec<Vec<f64>> {
    let fft_size = frame_cfg.frame_len.next_power_of_two();
    let window = hann_window(frame_cfg.frame_len);
    let bank = mel_filterbank(cfg, frame_cfg.sample_rate, fft_size);

    frames
        .iter()
        .map(|frame| {
            let windowed: Vec<f64> =
                frame.iter().zip(window.iter()).map(|(x, w)| x * w).collect();
            let spectrum = magnitude_spectrum(&windowed, fft_size);
            let log_mel: Vec<f64> = bank
                .iter()
                .map(|filter| {
                    let e: f64 =
                        filter.iter().zip(spectrum.iter()).map(|(w, s)| w * s).sum();
                    e.max(LOG_FLOOR).ln()
                })
                .collect();
            dct_ii_ortho(&log_mel, cfg.n_coeffs)
        })
        .collect()
}
