//! Pipeline configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency band searched for breathing, in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandLimits {
    pub f_min: f64,
    pub f_max: f64,
}

impl Default for BandLimits {
    /// Roughly 8 to 50 breaths per minute.
    fn default() -> Self {
        Self { f_min: 0.133, f_max: 0.833 }
    }
}

impl BandLimits {
    pub fn new(f_min: f64, f_max: f64) -> Self {
        Self { f_min, f_max }
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.f_min > 0.0 && self.f_min < self.f_max && self.f_max < fs / 2.0) {
            return Err(Error::InvalidParams(format!(
                "band [{}, {}] Hz must satisfy 0 < f_min < f_max < fs/2 = {}",
                self.f_min,
                self.f_max,
                fs / 2.0
            )));
        }
        Ok(())
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f_min && f <= self.f_max
    }
}

/// Parameters shared by both estimation stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineParams {
    /// Samples per rate-estimation window.
    pub window_len: usize,
    /// Windows carved jointly by each trace search.
    pub window_count: usize,
    /// Samples shared by consecutive windows.
    pub overlap: usize,
    /// Weight of the transition prior against spectrogram energy.
    pub smoothing: f64,
    /// Samples per waveform estimate.
    pub waveform_len: usize,
    /// Iterative-filtering width factor.
    pub chi: f64,
    /// Standard deviation of rate changes between windows, in BPM.
    pub transition_std_bpm: f64,
    /// Peak-to-median ratio required to declare breathing in a window.
    pub presence_gamma: f64,
    pub band: BandLimits,
    /// Sampling rate in Hz.
    pub fs: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            window_len: 150,
            window_count: 46,
            overlap: 140,
            smoothing: 0.5,
            waveform_len: 600,
            chi: 2.7,
            transition_std_bpm: 4.552,
            presence_gamma: 2.0,
            band: BandLimits::default(),
            fs: 9.9,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.window_len < 3 {
            return bad(format!("window_len {} must be at least 3", self.window_len));
        }
        if self.overlap >= self.window_len {
            return bad(format!(
                "overlap {} must be smaller than window_len {}",
                self.overlap, self.window_len
            ));
        }
        if self.window_count == 0 {
            return bad("window_count must be positive".into());
        }
        if self.waveform_len <= self.window_len {
            return bad(format!(
                "waveform_len {} must exceed window_len {}",
                self.waveform_len, self.window_len
            ));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return bad(format!("smoothing {} must be >= 0", self.smoothing));
        }
        if !(self.chi > 0.0 && self.chi.is_finite()) {
            return bad(format!("chi {} must be > 0", self.chi));
        }
        if !(self.transition_std_bpm > 0.0 && self.transition_std_bpm.is_finite()) {
            return bad(format!("transition_std_bpm {} must be > 0", self.transition_std_bpm));
        }
        if !(self.presence_gamma >= 0.0 && self.presence_gamma.is_finite()) {
            return bad(format!("presence_gamma {} must be >= 0", self.presence_gamma));
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return bad(format!("fs {} must be > 0", self.fs));
        }
        self.band.validate(self.fs)
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.fs
    }

    /// Samples between consecutive window starts.
    pub fn hop(&self) -> usize {
        self.window_len - self.overlap
    }

    /// Number of spectrogram bins, one per non-zero ACF lag.
    pub fn bins(&self) -> usize {
        self.window_len - 1
    }

    /// Samples needed to produce `estimates` full (rate + waveform) estimates.
    pub fn samples_for_estimates(&self, estimates: usize) -> usize {
        self.waveform_len + estimates.saturating_sub(1) * self.hop()
    }
}
