//! Spectral-slope estimation for power-law (1/f^beta) signals.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{CoreError, Result};

/// Averaged-periodogram power spectrum (Hann window), one-sided, excluding
/// the DC bin. Returns `segment_len / 2` powers for bins 1..=N/2.
pub fn welch_psd(signal: &[f64], segment_len: usize, overlap: f64) -> Result<Vec<f64>> {
    assert!(segment_len >= 16, "segment length too small");
    assert!((0.0..1.0).contains(&overlap), "overlap must lie in [0, 1)");
    let hop = ((segment_len as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    if signal.len() < segment_len {
        return Err(CoreError::TooShort {
            need: segment_len,
            got: signal.len(),
        });
    }
    let segments = (signal.len() - segment_len) / hop + 1;
    let window: Vec<f64> = (0..segment_len)
        .map(|i| {
            let phase = 2.0 * std::f64::consts::PI * i as f64 / segment_len as f64;
            0.5 * (1.0 - phase.cos())
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(segment_len);
    let mut psd = vec![0.0; segment_len / 2];
    let mut buf = vec![Complex::new(0.0, 0.0); segment_len];
    for seg in 0..segments {
        let start = seg * hop;
        for i in 0..segment_len {
            buf[i] = Complex::new(signal[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, p) in psd.iter_mut().enumerate() {
            *p += buf[k + 1].norm_sqr();
        }
    }
    for p in &mut psd {
        *p /= segments as f64;
    }
    Ok(psd)
}

/// Least-squares exponent of a 1/f^beta power law.
///
/// The fit runs over log power versus log frequency on the averaged
/// periodogram, skipping the lowest three bins (leakage) and the top
/// octave (discretization artifacts); if more than two decades remain the
/// fit band is centred geometrically. Returns beta, the negated slope.
pub fn spectral_slope(signal: &[f64], segment_len: usize, overlap: f64) -> Result<f64> {
    let need = 8 * segment_len;
    if signal.len() < need {
        return Err(CoreError::TooShort {
            need,
            got: signal.len(),
        });
    }
    let min = signal.iter().cloned().fold(f64::MAX, f64::min);
    let max = signal.iter().cloned().fold(f64::MIN, f64::max);
    if max == min {
        return Err(CoreError::ConstantSignal);
    }
    let psd = welch_psd(signal, segment_len, overlap)?;
    // psd[k] holds bin k+1; fit over bin indices [3, N/4].
    let mut lo_bin = 3usize;
    let mut hi_bin = segment_len / 4;
    let decades = ((hi_bin as f64) / (lo_bin as f64)).log10();
    if decades > 2.0 {
        let center = ((lo_bin as f64) * (hi_bin as f64)).sqrt();
        lo_bin = (center / 10.0).round().max(1.0) as usize;
        hi_bin = (center * 10.0).round() as usize;
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for bin in lo_bin..=hi_bin {
        let p = psd[bin - 1];
        if p > 0.0 {
            xs.push((bin as f64).log10());
            ys.push(p.log10());
        }
    }
    if xs.len() < 2 {
        return Err(CoreError::ConstantSignal);
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    Ok(-(sxy / sxx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn white(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn brown(n: usize, seed: u64) -> Vec<f64> {
        let mut acc = 0.0;
        white(n, seed)
            .into_iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect()
    }

    #[test]
    fn white_noise_is_flat() {
        let beta = spectral_slope(&white(1 << 17, 42), 1024, 0.5).unwrap();
        assert!(beta.abs() < 0.2, "beta = {beta}");
    }

    #[test]
    fn integrated_noise_has_slope_two() {
        let beta = spectral_slope(&brown(1 << 17, 43), 1024, 0.5).unwrap();
        assert!((beta - 2.0).abs() < 0.3, "beta = {beta}");
    }

    #[test]
    fn mixed_signal_lands_between() {
        let w = white(1 << 17, 44);
        let b = brown(1 << 17, 45);
        // Equalize band power over the fit band before mixing.
        let pw: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let pb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mixed: Vec<f64> = w
            .iter()
            .zip(&b)
            .map(|(x, y)| x / pw + y / pb)
            .collect();
        let beta = spectral_slope(&mixed, 1024, 0.5).unwrap();
        assert!((0.5..1.5).contains(&beta), "beta = {beta}");
    }

    #[test]
    fn constant_signal_faults() {
        let signal = vec![0.7; 1 << 14];
        assert!(matches!(
            spectral_slope(&signal, 1024, 0.5),
            Err(CoreError::ConstantSignal)
        ));
    }

    #[test]
    fn short_signal_faults() {
        assert!(matches!(
            spectral_slope(&white(1000, 46), 1024, 0.5),
            Err(CoreError::TooShort { .. })
        ));
    }

    #[test]
    fn welch_finds_a_sine_peak() {
        let n = 1 << 14;
        let freq_bin = 37.0;
        let seg = 1024;
        let signal: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq_bin * i as f64 / seg as f64).sin())
            .collect();
        let psd = welch_psd(&signal, seg, 0.5).unwrap();
        let peak = psd
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
            + 1;
        assert_eq!(peak, freq_bin as usize);
    }
}
