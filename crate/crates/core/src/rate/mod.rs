//! Respiratory-rate estimation.
//!
//! Each window of CSI is conjugate multiplied against a reference antenna,
//! the autocorrelation of every subcarrier's magnitude and phase is taken,
//! and the ACFs are combined with weights equal to their in-band energy
//! ratio. The band-limited spectrum of the combined ACF becomes one column of
//! a spectrogram, and a smooth frequency trace is carved through it.

mod acf;
mod amtc;
mod conjugate;
mod spectrogram;
mod spectrum;

pub use acf::{acf, build_acf_matrix, AcfMatrix};
pub use amtc::{
    amtc, breath_presence, carve_trace, log_transition, presence_at, rate_at, window_for_sample,
    AmtcParams, CarvedTrace, RateTrace,
};
pub use conjugate::{conjugate_multiply, ConjugateLinkSet};
pub use spectrogram::{build_spectrogram, spectrogram_at, window_spectrum, Spectrogram};
pub use spectrum::{bnr, bnr_combine, zoom_dft, zoom_frequencies, zoom_spectrum, BnrKernel};

use crate::error::Result;
use crate::numeric::window_starts;
use crate::params::PipelineParams;
use crate::tensor::CsiTensor;

/// Online rate estimates: one per completed window.
#[derive(Debug, Clone)]
pub struct SlidingRate {
    pub window_starts: Vec<usize>,
    /// Entry `w` is the final-window result of carving the trailing
    /// `window_count` columns ending at window `w`.
    pub trace: RateTrace,
    pub spectrogram: Spectrogram,
}

impl SlidingRate {
    /// Last sample index covered by window `w`.
    pub fn window_end(&self, w: usize, params: &PipelineParams) -> usize {
        self.window_starts[w] + params.window_len - 1
    }
}

/// Run the rate estimator as if samples arrived one window at a time.
pub fn sliding_rate(csi: &CsiTensor, params: &PipelineParams) -> Result<SlidingRate> {
    params.validate()?;
    let starts = window_starts(csi.times(), params.window_len, params.overlap)?;
    let spectrogram = spectrogram_at(csi, &starts, params)?;
    let amtc_params = AmtcParams::from(params);
    let mut trace = RateTrace::default();
    for w in 0..starts.len() {
        let first = (w + 1).saturating_sub(params.window_count);
        let carved = amtc(&spectrogram.columns(first..w + 1), &amtc_params);
        trace.push_last_of(&carved);
    }
    Ok(SlidingRate { window_starts: starts, trace, spectrogram })
}
