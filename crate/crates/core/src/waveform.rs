//! Respiratory-waveform estimation.
//!
//! The magnitude and phase of every conjugate-multiplied subcarrier are
//! z-scored, their DTFT at the estimated breathing rate picks a primary
//! column, and all columns are sign-aligned to it and summed with weights
//! proportional to their breathing-rate response. The combined signal is
//! split by iterative filtering and the mode whose spectral peak lies
//! closest to the breathing rate is the waveform.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fif::{fif_decompose, FifConfig};
use crate::numeric::{first_argmax, wrap_phase, z_score};
use crate::params::PipelineParams;
use crate::rate::{conjugate_multiply, zoom_frequencies, zoom_spectrum};
use crate::tensor::CsiView;

/// Z-scored magnitude and phase columns, link-major:
/// `[|.| link 0 (K cols), arg link 0 (K cols), |.| link 1, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZMatrix {
    len: usize,
    columns: Vec<Vec<f64>>,
}

impl ZMatrix {
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let len = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != len) {
            return Err(Error::LengthMismatch { left: len, right: bad.len() });
        }
        Ok(Self { len, columns })
    }

    /// Number of time samples.
    pub fn rows(&self) -> usize {
        self.len
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.columns[c]
    }

    pub fn iter_columns(&self) -> impl Iterator<Item = &[f64]> {
        self.columns.iter().map(Vec::as_slice)
    }
}

pub fn build_z_matrix(window: &CsiView<'_>) -> Result<ZMatrix> {
    let cm = conjugate_multiply(window)?;
    let k = cm.subcarriers();
    let columns = (0..2 * k * cm.links())
        .into_par_iter()
        .map(|c| {
            let (link, rest) = (c / (2 * k), c % (2 * k));
            if rest < k {
                z_score(&cm.magnitude(link, rest))
            } else {
                z_score(&cm.phase(link, rest - k))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ZMatrix::from_columns(columns)
}

/// Per-column DTFT at the breathing rate plus the primary column.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierSpectra {
    pub values: Vec<Complex64>,
    pub primary: usize,
}

/// DTFT of each column's trailing `n` samples at `rate_hz`, with time
/// indices counted from the first row of `z`.
pub fn dtft_at_rate(z: &ZMatrix, rate_hz: f64, n: usize, sample_period: f64) -> Result<SubcarrierSpectra> {
    let rows = z.rows();
    if n == 0 || n > rows {
        return Err(Error::InsufficientSamples { needed: n, got: rows });
    }
    if z.cols() == 0 {
        return Err(Error::EmptyInput);
    }
    let first = rows - n;
    let twiddles: Vec<Complex64> = (first..rows)
        .map(|i| Complex64::from_polar(1.0, -2.0 * PI * rate_hz * i as f64 * sample_period))
        .collect();
    let values: Vec<Complex64> = z
        .iter_columns()
        .map(|col| col[first..].iter().zip(&twiddles).map(|(v, w)| w * v).sum())
        .collect();
    let primary = select_primary(&values);
    Ok(SubcarrierSpectra { values, primary })
}

/// Lowest index attaining the largest modulus.
pub fn select_primary(values: &[Complex64]) -> usize {
    let mags: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    first_argmax(&mags).unwrap_or(0)
}

/// `+1` when `value` is within a quarter turn of `primary`, else `-1`.
pub fn alignment_sign(primary: Complex64, value: Complex64) -> f64 {
    if wrap_phase(primary.arg() - value.arg()).abs() <= FRAC_PI_2 {
        1.0
    } else {
        -1.0
    }
}

/// Sign-aligned, response-weighted sum of all columns.
pub fn combine_subcarriers(z: &ZMatrix, spectra: &SubcarrierSpectra) -> Result<Vec<f64>> {
    let primary = spectra.values[spectra.primary];
    let scale = primary.norm();
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::DegeneratePrimary);
    }
    let mut out = vec![0.0; z.rows()];
    for (col, &value) in z.iter_columns().zip(&spectra.values) {
        let w = alignment_sign(primary, value) * value.norm() / scale;
        if w == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(col) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// Index of the peak frequency closest to `rate_hz`; ties go to the lowest
/// index.
pub fn nearest_peak(peaks_hz: &[f64], rate_hz: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &f) in peaks_hz.iter().enumerate() {
        let d = (f - rate_hz).abs();
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Frequency of the largest in-band zoom-spectrum bin of the trailing
/// `window_len` samples of `x`.
pub fn dominant_in_band(x: &[f64], params: &PipelineParams) -> f64 {
    let n = params.window_len.min(x.len());
    let bins = params.bins();
    let spectrum = zoom_spectrum(&x[x.len() - n..], &params.band, params.fs, bins);
    let freqs = zoom_frequencies(&params.band, bins);
    freqs[first_argmax(&spectrum).unwrap_or(0)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveformEstimate {
    pub r: Vec<f64>,
    pub source_imf_index: usize,
    pub rate_used_bpm: f64,
}

/// Estimate the waveform over `window` given a breathing rate.
///
/// `window` must span exactly `waveform_len` samples.
pub fn estimate_waveform(
    window: &CsiView<'_>,
    rate_hz: f64,
    params: &PipelineParams,
    fif: &FifConfig,
) -> Result<WaveformEstimate> {
    if window.len() != params.waveform_len {
        return Err(Error::InsufficientSamples { needed: params.waveform_len, got: window.len() });
    }
    let z = build_z_matrix(window)?;
    let spectra = dtft_at_rate(&z, rate_hz, params.window_len, params.sample_period())?;
    let combined = combine_subcarriers(&z, &spectra)?;
    let set = fif_decompose(&combined, fif)?;
    if set.is_empty() {
        return Err(Error::NoExtrema);
    }
    let peaks: Vec<f64> = set.imfs.par_iter().map(|imf| dominant_in_band(imf, params)).collect();
    let source = nearest_peak(&peaks, rate_hz).unwrap_or(0);
    let r = set.imfs.into_iter().nth(source).unwrap_or_default();
    Ok(WaveformEstimate { r, source_imf_index: source, rate_used_bpm: 60.0 * rate_hz })
}
