//! Minimal radix-2 FFT for magnitude spectra. Frame lengths are padded to
//! the next power of two by the caller.

/// In-place iterative radix-2 Cooley-Tukey. `re`/`im` length must be a
/// power of two.
pub(crate) fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    debug_assert_eq!(im.len(), n);
    if n < 2 {
        return;
    }

    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 0..n - 1 {
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
        let mut mask = n >> 1;
        while j & mask != 0 {
            j &= !mask;
            mask >>= 1;
        }
        j |= mask;
    }

    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let (w_re, w_im) = (ang.cos(), ang.sin());
        let mut start = 0;
        while start < n {
            let mut cur_re = 1.0;
            let mut cur_im = 0.0;
            for k in 0..len / 2 {
                let a = start + k;
                let b = a + len / 2;
                let t_re = re[b] * cur_re - im[b] * cur_im;
                let t_im = re[b] * cur_im + im[b] * cur_re;
                re[b] = re[a] - t_re;
                im[b] = im[a] - t_im;
                re[a] += t_re;
                im[a] += t_im;
                let next_re = cur_re * w_re - cur_im * w_im;
                cur_im = cur_re * w_im + cur_im * w_re;
                cur_re = next_re;
            }
            start += len;
        }
        len <<= 1;
    }
}

/// Magnitude spectrum of a real signal, zero-padded to `fft_size`.
/// Returns `fft_size / 2 + 1` bins.
pub(crate) fn magnitude_spectrum(signal: &[f64], fft_size: usize) -> Vec<f64> {
    debug_assert!(fft_size.is_power_of_two());
    debug_assert!(signal.len() <= fft_size);
    let mut re = vec![0.0; fft_size];
    let mut im = vec![0.0; fft_size];
    re[..signal.len()].copy_from_slice(signal);
    fft_in_place(&mut re, &mut im);
    (0..=fft_size / 2).map(|k| (re[k] * re[k] + im[k] * im[k]).sqrt()).collect()
}
