//! Band-energy ratio and band-limited (zoom) spectra.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::AcfMatrix;
use crate::params::BandLimits;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Precomputed DFT rows for the in-band bins of a fixed-length signal.
///
/// The band-energy ratio only needs the in-band bins explicitly; the total
/// energy over all bins follows from Parseval's identity.
#[derive(Debug, Clone)]
pub struct BnrKernel {
    len: usize,
    /// (multiplicity, twiddles) for each in-band non-negative bin
    rows: Vec<(f64, Vec<Complex64>)>,
}

impl BnrKernel {
    pub fn new(len: usize, band: &BandLimits, fs: f64) -> Self {
        let mut rows = Vec::new();
        for k in 0..=len / 2 {
            let f = k as f64 * fs / len as f64;
            if !band.contains(f) {
                continue;
            }
            // bins k and len - k carry the same energy for real input
            let mult = if k == 0 || 2 * k == len { 1.0 } else { 2.0 };
            let tw = (0..len)
                .map(|n| Complex64::from_polar(1.0, -2.0 * PI * ((k * n) % len) as f64 / len as f64))
                .collect();
            rows.push((mult, tw));
        }
        Self { len, rows }
    }

    pub fn bnr(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.len, "kernel built for a different length");
        let total = self.len as f64 * x.iter().map(|v| v * v).sum::<f64>();
        if total == 0.0 {
            return 0.0;
        }
        let inband: f64 = self
            .rows
            .iter()
            .map(|(mult, tw)| mult * x.iter().zip(tw).map(|(v, w)| w * v).sum::<Complex64>().norm_sqr())
            .sum();
        (inband / total).clamp(0.0, 1.0)
    }
}

/// Fraction of DFT energy whose bin frequency lies inside `band`.
///
/// The denominator covers every bin including DC.
pub fn bnr(x: &[f64], band: &BandLimits, fs: f64) -> f64 {
    BnrKernel::new(x.len(), band, fs).bnr(x)
}

/// Sum of the ACF columns, each weighted by its band-energy ratio.
pub fn bnr_combine(m: &AcfMatrix, band: &BandLimits, fs: f64) -> Vec<f64> {
    let kernel = BnrKernel::new(m.lags(), band, fs);
    let mut out = vec![0.0; m.lags()];
    for col in m.iter_columns() {
        let w = kernel.bnr(col);
        if w == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(col) {
            *o += w * v;
        }
    }
    out
}

/// `n_bins` evenly spaced frequencies from `f_min` to `f_max` inclusive.
pub fn zoom_frequencies(band: &BandLimits, n_bins: usize) -> Vec<f64> {
    match n_bins {
        0 => Vec::new(),
        1 => vec![band.f_min],
        _ => {
            let step = (band.f_max - band.f_min) / (n_bins - 1) as f64;
            (0..n_bins).map(|i| band.f_min + step * i as f64).collect()
        }
    }
}

/// DTFT of `x` (sample `n` at time `n / fs`) on the [`zoom_frequencies`] grid,
/// computed with Bluestein's chirp-z algorithm.
pub fn zoom_dft(x: &[f64], band: &BandLimits, fs: f64, n_bins: usize) -> Vec<Complex64> {
    let n = x.len();
    let m = n_bins;
    if n == 0 || m == 0 {
        return vec![Complex64::new(0.0, 0.0); m];
    }
    let ts = 1.0 / fs;
    let step = if m > 1 { (band.f_max - band.f_min) / (m - 1) as f64 } else { 0.0 };
    let start = 2.0 * PI * band.f_min * ts;
    let phi = 2.0 * PI * step * ts;
    let chirp = |k: usize| {
        let kk = (k as f64) * (k as f64);
        Complex64::from_polar(1.0, -0.5 * phi * kk)
    };

    let len = (n + m - 1).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); len];
    for (i, &v) in x.iter().enumerate() {
        a[i] = Complex64::from_polar(v, -start * i as f64) * chirp(i);
    }
    let mut h = vec![Complex64::new(0.0, 0.0); len];
    for (k, slot) in h.iter_mut().enumerate().take(m) {
        *slot = chirp(k).conj();
    }
    for k in 1..n {
        h[len - k] = chirp(k).conj();
    }

    let (fwd, inv) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(len), p.plan_fft_inverse(len))
    });
    fwd.process(&mut a);
    fwd.process(&mut h);
    for (u, v) in a.iter_mut().zip(&h) {
        *u *= v;
    }
    inv.process(&mut a);
    let scale = 1.0 / len as f64;
    (0..m).map(|k| a[k] * scale * chirp(k)).collect()
}

/// Magnitude of [`zoom_dft`].
pub fn zoom_spectrum(x: &[f64], band: &BandLimits, fs: f64, n_bins: usize) -> Vec<f64> {
    zoom_dft(x, band, fs, n_bins).into_iter().map(|c| c.norm()).collect()
}
