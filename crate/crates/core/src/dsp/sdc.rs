//! Shifted delta coefficients over an MFCC sequence.

use super::SdcConfig;

/// SDC rows aligned to the MFCC frames.
///
/// Block `i` of frame `t` is `c[t + i*p + d] - c[t + i*p - d]` with frame
/// indices clamped to the valid range, so edges replicate rather than
/// producing spurious deltas. Output width is `n_base * k`.
pub fn compute_sdc(mfcc: &[Vec<f64>], cfg: &SdcConfig) -> Vec<Vec<f64>> {
    let n = mfcc.len();
    if n == 0 {
        return Vec::new();
    }
    let n_base = cfg.n_base.min(mfcc[0].len());
    let clamp = |idx: isize| -> usize { idx.clamp(0, n as isize - 1) as usize };

    (0..n)
        .map(|t| {
            let mut row = Vec::with_capacity(cfg.n_base * cfg.k);
            for i in 0..cfg.k {
                let base = t as isize + (i * cfg.p) as isize;
                let ahead = &mfcc[clamp(base + cfg.d as isize)];
                let behind = &mfcc[clamp(base - cfg.d as isize)];
                for c in 0..n_base {
                    row.push(ahead[c] - behind[c]);
                }
            }
            row
        })
        .collect()
}
