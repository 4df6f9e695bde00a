use rayon::prelude::*;

use super::{bnr_combine, build_acf_matrix, conjugate_multiply, zoom_frequencies, zoom_spectrum};
use crate::error::{Error, Result};
use crate::numeric::window_starts;
use crate::params::PipelineParams;
use crate::tensor::{CsiTensor, CsiView};

/// Non-negative (bins x windows) matrix of band-limited spectra, stored
/// column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    bins: usize,
    windows: usize,
    data: Vec<f64>,
    bin_frequencies: Vec<f64>,
}

impl Spectrogram {
    pub fn new(bins: usize, windows: usize, data: Vec<f64>, bin_frequencies: Vec<f64>) -> Result<Self> {
        if data.len() != bins * windows {
            return Err(Error::LengthMismatch { left: data.len(), right: bins * windows });
        }
        if bin_frequencies.len() != bins {
            return Err(Error::LengthMismatch { left: bin_frequencies.len(), right: bins });
        }
        if bin_frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("bin frequencies must increase".into()));
        }
        if data.iter().any(|v| v.is_nan() || *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParams("spectrogram entries must be finite and >= 0".into()));
        }
        Ok(Self { bins, windows, data, bin_frequencies })
    }

    pub(crate) fn from_columns(columns: Vec<Vec<f64>>, bin_frequencies: Vec<f64>) -> Self {
        let windows = columns.len();
        let bins = bin_frequencies.len();
        debug_assert!(columns.iter().all(|c| c.len() == bins));
        Self { bins, windows, data: columns.into_iter().flatten().collect(), bin_frequencies }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn windows(&self) -> usize {
        self.windows
    }

    pub fn get(&self, bin: usize, window: usize) -> f64 {
        self.data[window * self.bins + bin]
    }

    pub fn column(&self, window: usize) -> &[f64] {
        &self.data[window * self.bins..(window + 1) * self.bins]
    }

    pub fn bin_frequencies(&self) -> &[f64] {
        &self.bin_frequencies
    }

    pub fn bin_spacing_hz(&self) -> f64 {
        match self.bin_frequencies.as_slice() {
            [first, second, ..] => second - first,
            _ => 0.0,
        }
    }

    /// Columns `range` as a new spectrogram.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Spectrogram {
        Spectrogram {
            bins: self.bins,
            windows: range.len(),
            data: self.data[range.start * self.bins..range.end * self.bins].to_vec(),
            bin_frequencies: self.bin_frequencies.clone(),
        }
    }

    /// Each column scaled to unit sum; all-zero columns stay zero.
    pub fn normalized_columns(&self) -> Spectrogram {
        let mut data = self.data.clone();
        for col in data.chunks_exact_mut(self.bins.max(1)) {
            let sum: f64 = col.iter().sum();
            if sum > 0.0 {
                col.iter_mut().for_each(|v| *v /= sum);
            }
        }
        Spectrogram { data, ..self.clone() }
    }
}

/// Spectrum of the BNR-combined ACF of one window.
pub fn window_spectrum(window: &CsiView<'_>, params: &PipelineParams) -> Result<Vec<f64>> {
    let cm = conjugate_multiply(window)?;
    let acfs = build_acf_matrix(&cm);
    let combined = bnr_combine(&acfs, &params.band, params.fs);
    Ok(zoom_spectrum(&combined, &params.band, params.fs, params.bins()))
}

/// Spectrogram over windows starting at `starts`.
pub fn spectrogram_at(csi: &CsiTensor, starts: &[usize], params: &PipelineParams) -> Result<Spectrogram> {
    params.validate()?;
    let columns = starts
        .par_iter()
        .map(|&s| window_spectrum(&csi.window(s, params.window_len)?, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrogram::from_columns(columns, zoom_frequencies(&params.band, params.bins())))
}

/// Spectrogram of the first `window_count` windows of the capture.
pub fn build_spectrogram(csi: &CsiTensor, params: &PipelineParams) -> Result<Spectrogram> {
    params.validate()?;
    let needed = (params.window_count - 1) * params.hop() + params.window_len;
    if csi.times() < needed {
        return Err(Error::InsufficientSamples { needed, got: csi.times() });
    }
    let starts = window_starts(needed, params.window_len, params.overlap)?;
    spectrogram_at(csi, &starts, params)
}
