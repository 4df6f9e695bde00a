//! Fast iterative filtering.
//!
//! An intrinsic mode function is extracted by repeatedly subtracting a
//! moving average, `s <- s - K * s`, where the averaging kernel width follows
//! the mean spacing of the signal's extrema. The iteration is carried out in
//! the frequency domain on a reflectively extended copy of the signal, so
//! each step costs one multiply per frequency bin.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::count_extrema;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FifConfig {
    /// Filter-width factor.
    pub chi: f64,
    /// Stop the inner loop once `||s_next - s||^2 / ||s||^2` drops below this.
    pub inner_tol: f64,
    pub inner_max: usize,
    pub max_imfs: usize,
}

impl Default for FifConfig {
    fn default() -> Self {
        Self { chi: 2.7, inner_tol: 1e-3, inner_max: 200, max_imfs: 12 }
    }
}

impl FifConfig {
    pub fn with_chi(chi: f64) -> Self {
        Self { chi, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.chi > 0.0 && self.inner_tol > 0.0) || self.inner_max == 0 || self.max_imfs == 0 {
            return Err(Error::InvalidParams(format!("bad iterative-filtering config {self:?}")));
        }
        Ok(())
    }
}

/// Intrinsic mode functions, highest frequency first, plus what is left.
#[derive(Debug, Clone, PartialEq)]
pub struct ImfSet {
    pub imfs: Vec<Vec<f64>>,
    pub residual: Vec<f64>,
}

impl ImfSet {
    pub fn len(&self) -> usize {
        self.imfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.imfs.is_empty()
    }

    /// Sum of all modes and the residual.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residual.clone();
        for imf in &self.imfs {
            for (o, v) in out.iter_mut().zip(imf) {
                *o += v;
            }
        }
        out
    }
}

/// Filter length `2 * floor(chi * m / k)`, kept even and within `[2, m - 1]`.
pub fn filter_length(m: usize, k: usize, chi: f64) -> Result<usize> {
    if k == 0 {
        return Err(Error::NoExtrema);
    }
    let raw = 2.0 * (chi * m as f64 / k as f64).floor();
    let upper = m.saturating_sub(1);
    let mut l = if raw >= upper as f64 { upper } else { raw as usize };
    if l % 2 == 1 {
        l -= 1;
    }
    Ok(l.max(2))
}

/// Low-pass kernel for a filter length `l`: a uniform window convolved with
/// itself three times, spanning roughly `2 * l + 1` samples.
///
/// Symmetric, non-negative, unit sum, odd length.
pub fn smoothing_kernel(l: usize) -> Vec<f64> {
    let r = ((l as f64 / 3.0).round() as usize).max(1);
    let width = 2 * r + 1;
    let mut counts = vec![1u64];
    for _ in 0..3 {
        let mut next = vec![0; counts.len() + width - 1];
        for (i, c) in counts.iter().enumerate() {
            for o in &mut next[i..i + width] {
                *o += c;
            }
        }
        counts = next;
    }
    let total = (width as f64).powi(3);
    counts.into_iter().map(|c| c as f64 / total).collect()
}

/// Mirror `x` by `pad` samples on each side (edge samples are not repeated).
fn reflect(x: &[f64], pad: usize) -> Vec<f64> {
    let m = x.len();
    debug_assert!(pad < m);
    let mut out = Vec::with_capacity(m + 2 * pad);
    out.extend((1..=pad).rev().map(|i| x[i]));
    out.extend_from_slice(x);
    out.extend((1..=pad).map(|i| x[m - 1 - i]));
    out
}

struct Filter {
    /// real kernel response per bin
    response: Vec<f64>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Filter {
    fn new(len: usize, kernel: &[f64]) -> Self {
        let (fwd, inv) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(len), p.plan_fft_inverse(len))
        });
        let half_width = (kernel.len() - 1) / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (i, w) in kernel.iter().enumerate() {
            let offset = i as isize - half_width as isize;
            buf[offset.rem_euclid(len as isize) as usize] += w;
        }
        fwd.process(&mut buf);
        Self { response: buf.iter().map(|c| c.re).collect(), fwd, inv }
    }
}

/// Moving average of `x` with [`smoothing_kernel`]`(l)`, after reflective
/// extension at both ends.
pub fn smooth(x: &[f64], l: usize) -> Vec<f64> {
    let m = x.len();
    let kernel = smoothing_kernel(l);
    let pad = ((kernel.len() - 1) / 2).min(m.saturating_sub(1));
    let ext = reflect(x, pad);
    let filter = Filter::new(ext.len(), &kernel);
    let mut buf: Vec<Complex64> = ext.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    filter.fwd.process(&mut buf);
    for (b, r) in buf.iter_mut().zip(&filter.response) {
        *b *= r;
    }
    filter.inv.process(&mut buf);
    let scale = 1.0 / ext.len() as f64;
    buf[pad..pad + m].iter().map(|c| c.re * scale).collect()
}

/// Split `x` into its fastest oscillatory mode and the remainder
/// `x - imf`.
pub fn extract_imf(x: &[f64], cfg: &FifConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let m = x.len();
    let k = count_extrema(x);
    if k == 0 || m < 3 {
        return Err(Error::NoExtrema);
    }
    let l = filter_length(m, k, cfg.chi)?;
    let kernel = smoothing_kernel(l);
    let pad = ((kernel.len() - 1) / 2).min(m - 1);
    let ext = reflect(x, pad);
    let len = ext.len();
    let filter = Filter::new(len, &kernel);

    let mut spec: Vec<Complex64> = ext.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    filter.fwd.process(&mut spec);
    for _ in 0..cfg.inner_max {
        let mut change = 0.0;
        let mut norm = 0.0;
        for (s, r) in spec.iter_mut().zip(&filter.response) {
            let n = s.norm_sqr();
            norm += n;
            change += r * r * n;
            *s *= 1.0 - r;
        }
        if norm == 0.0 || change / norm < cfg.inner_tol {
            break;
        }
    }
    filter.inv.process(&mut spec);
    let scale = 1.0 / len as f64;
    let imf: Vec<f64> = spec[pad..pad + m].iter().map(|c| c.re * scale).collect();
    let rest = x.iter().zip(&imf).map(|(a, b)| a - b).collect();
    Ok((imf, rest))
}

/// Decompose `x` into modes until the remainder has fewer than three extrema
/// or `max_imfs` modes have been taken.
pub fn fif_decompose(x: &[f64], cfg: &FifConfig) -> Result<ImfSet> {
    cfg.validate()?;
    if x.len() < 8 {
        return Err(Error::TooShort { needed: 8, got: x.len() });
    }
    let mut imfs = Vec::new();
    let mut rest = x.to_vec();
    while imfs.len() < cfg.max_imfs && count_extrema(&rest) >= 3 {
        let (imf, next) = extract_imf(&rest, cfg)?;
        imfs.push(imf);
        rest = next;
    }
    Ok(ImfSet { imfs, residual: rest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const FS: f64 = 9.9;

    fn tone(f: f64, m: usize) -> Vec<f64> {
        (0..m).map(|n| (2.0 * PI * f * n as f64 / FS).sin()).collect()
    }

    /// Frequency of the largest non-DC DFT bin, direct O(m^2) evaluation.
    fn dominant_hz(x: &[f64]) -> f64 {
        let m = x.len();
        let power = |k: usize| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in x.iter().enumerate() {
                let a = -2.0 * PI * ((k * n) % m) as f64 / m as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            re * re + im * im
        };
        let k = (1..=m / 2).max_by(|&a, &b| power(a).total_cmp(&power(b))).unwrap();
        k as f64 * FS / m as f64
    }

    fn energy(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn filter_length_cases() {
        assert_eq!(filter_length(600, 20, 2.7).unwrap(), 162);
        assert_eq!(filter_length(100, 100, 1.0).unwrap(), 2);
        assert_eq!(filter_length(600, 2, 2.7).unwrap(), 598);
        assert!(matches!(filter_length(600, 0, 2.7), Err(Error::NoExtrema)));
    }

    #[test]
    fn kernel_shape() {
        for l in [2, 4, 37, 162] {
            let k = smoothing_kernel(l);
            assert_eq!(k.len() % 2, 1);
            assert!(k.len().abs_diff(2 * l + 1) <= 3);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(k.iter().all(|&v| v >= 0.0));
            for i in 0..k.len() {
                assert_eq!(k[i], k[k.len() - 1 - i]);
            }
        }
    }

    #[test]
    fn smoothing_preserves_constants() {
        let s = smooth(&[2.5; 50], 7);
        assert!(s.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn single_tone_is_one_mode() {
        let x = tone(0.25, 600);
        let (imf, rest) = extract_imf(&x, &FifConfig::default()).unwrap();
        for i in 0..600 {
            assert!((imf[i] + rest[i] - x[i]).abs() <= 1e-12);
        }
        let mid = 200..400;
        let resid: f64 = rest[mid.clone()].iter().map(|v| v * v).sum::<f64>();
        let total: f64 = x[mid].iter().map(|v| v * v).sum::<f64>();
        assert!((resid / total).sqrt() <= 0.05, "relative residual {}", (resid / total).sqrt());

        let set = fif_decompose(&x, &FifConfig::default()).unwrap();
        assert!(energy(&set.imfs[0]) >= 0.9 * energy(&x));
    }

    #[test]
    fn constant_has_no_extrema() {
        assert!(matches!(extract_imf(&[1.0; 40], &FifConfig::default()), Err(Error::NoExtrema)));
        let set = fif_decompose(&[1.0; 40], &FifConfig::default()).unwrap();
        assert!(set.is_empty());
        assert!(matches!(fif_decompose(&[1.0, 2.0, 1.0], &FifConfig::default()), Err(Error::TooShort { .. })));
    }

    #[test]
    fn separates_two_tones() {
        let m = 600;
        let bin = FS / m as f64;
        let x: Vec<f64> = tone(0.25, m).iter().zip(tone(1.5, m)).map(|(a, b)| a + b).collect();
        let set = fif_decompose(&x, &FifConfig::default()).unwrap();
        assert!(set.len() >= 2);
        assert!((dominant_hz(&set.imfs[0]) - 1.5).abs() <= bin, "{}", dominant_hz(&set.imfs[0]));
        assert!((dominant_hz(&set.imfs[1]) - 0.25).abs() <= bin, "{}", dominant_hz(&set.imfs[1]));
    }

    #[test]
    fn breathing_band_tones_survive() {
        for i in 0..=35 {
            let f = 0.133 + i as f64 * 0.02;
            let x = tone(f, 600);
            let set = fif_decompose(&x, &FifConfig::default()).unwrap();
            let r = energy(&set.imfs[0]) / energy(&x);
            assert!(r >= 0.9, "{f} Hz kept {r}");
        }
    }

    #[test]
    fn decomposition_is_deterministic() {
        let x: Vec<f64> = (0..300).map(|n| (n as f64 * 0.31).sin() + 0.3 * (n as f64 * 0.07).cos()).collect();
        let cfg = FifConfig::default();
        assert_eq!(fif_decompose(&x, &cfg).unwrap(), fif_decompose(&x, &cfg).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn reconstruction_is_exact(amps in proptest::collection::vec(-2f64..2.0, 4), freqs in proptest::collection::vec(0.05f64..3.0, 4), m in 64usize..700) {
            let x: Vec<f64> = (0..m)
                .map(|n| amps.iter().zip(&freqs).map(|(a, f)| a * (2.0 * PI * f * n as f64 / FS).sin()).sum())
                .collect();
            let set = fif_decompose(&x, &FifConfig::default()).unwrap();
            let back = set.reconstruct();
            let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-12);
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn faster_mode_comes_first(low in 0.15f64..0.4, ratio in 3.0f64..6.0) {
            let m = 600;
            let high = low * ratio;
            let x: Vec<f64> = tone(low, m).iter().zip(tone(high, m)).map(|(a, b)| a + b).collect();
            let set = fif_decompose(&x, &FifConfig::default()).unwrap();
            prop_assert!(set.len() >= 2);
            prop_assert!(dominant_hz(&set.imfs[0]) > dominant_hz(&set.imfs[1]));
        }
    }
}
