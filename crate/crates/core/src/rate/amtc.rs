//! Frequency-trace carving over a spectrogram.
//!
//! The trace maximises spectrogram energy along its path plus a weighted log
//! prior: a uniform start over all bins and zero-mean Gaussian jumps between
//! consecutive windows. The search is an exact Viterbi-style dynamic program.

use std::f64::consts::PI;

use super::Spectrogram;
use crate::numeric::clamped_ceil;
use crate::error::{Error, Result};
use crate::params::PipelineParams;

/// Knobs of [`amtc`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmtcParams {
    /// Weight of the log prior.
    pub smoothing: f64,
    /// Std of the rate change between consecutive windows, in BPM.
    pub transition_std_bpm: f64,
    /// Peak-to-median ratio for declaring breath present.
    pub presence_gamma: f64,
}

impl Default for AmtcParams {
    fn default() -> Self {
        Self { smoothing: 0.5, transition_std_bpm: 4.552, presence_gamma: 2.0 }
    }
}

impl From<&PipelineParams> for AmtcParams {
    fn from(p: &PipelineParams) -> Self {
        Self {
            smoothing: p.smoothing,
            transition_std_bpm: p.transition_std_bpm,
            presence_gamma: p.presence_gamma,
        }
    }
}

/// Carved rate per window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateTrace {
    /// Spectrogram bin index per window.
    pub bins: Vec<usize>,
    /// Rate per window in Hz.
    pub q_hz: Vec<f64>,
    /// Whether breathing was detected in each window.
    pub present: Vec<bool>,
}

impl RateTrace {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    fn push(&mut self, bin: usize, hz: f64, present: bool) {
        self.bins.push(bin);
        self.q_hz.push(hz);
        self.present.push(present);
    }

    pub(crate) fn push_last_of(&mut self, other: &RateTrace) {
        if let Some(w) = other.len().checked_sub(1) {
            self.push(other.bins[w], other.q_hz[w], other.present[w]);
        }
    }
}

/// Best trace and its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct CarvedTrace {
    pub bins: Vec<usize>,
    pub objective: f64,
}

/// Log density of a jump of `delta` bins under N(0, sigma^2).
pub fn log_transition(delta: f64, sigma: f64) -> f64 {
    -(sigma * (2.0 * PI).sqrt()).ln() - delta * delta / (2.0 * sigma * sigma)
}

/// Exact maximiser of `sum_w energy[q_w, w] + smoothing * log P(q)`, with
/// `log P(q) = -ln(bins) + sum_w log_transition(q_w - q_{w-1}, sigma_bins)`.
///
/// The energy is used as given. Ties go to the lower bin index.
pub fn carve_trace(energy: &Spectrogram, smoothing: f64, sigma_bins: f64) -> CarvedTrace {
    let nb = energy.bins();
    let nw = energy.windows();
    if nb == 0 || nw == 0 {
        return CarvedTrace { bins: Vec::new(), objective: 0.0 };
    }
    let jump: Vec<f64> = (0..nb).map(|d| smoothing * log_transition(d as f64, sigma_bins)).collect();
    let start = smoothing * -(nb as f64).ln();

    let mut score: Vec<f64> = energy.column(0).iter().map(|e| e + start).collect();
    let mut next = vec![0.0; nb];
    let mut back = vec![0usize; nb * nw];
    for w in 1..nw {
        let col = energy.column(w);
        for b in 0..nb {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (p, s) in score.iter().enumerate() {
                let cand = s + jump[b.abs_diff(p)];
                if cand > best {
                    best = cand;
                    arg = p;
                }
            }
            next[b] = best + col[b];
            back[w * nb + b] = arg;
        }
        std::mem::swap(&mut score, &mut next);
    }
    let mut end = 0;
    for (b, s) in score.iter().enumerate() {
        if *s > score[end] {
            end = b;
        }
    }
    let objective = score[end];
    let mut bins = vec![0; nw];
    bins[nw - 1] = end;
    for w in (1..nw).rev() {
        bins[w - 1] = back[w * nb + bins[w]];
    }
    CarvedTrace { bins, objective }
}

/// Carve the breathing-rate trace from `s`.
///
/// Columns are first scaled to unit sum so that energy and prior weigh the
/// same in every window. The transition std is converted from BPM to bins
/// using the spectrogram's bin spacing.
pub fn amtc(s: &Spectrogram, params: &AmtcParams) -> RateTrace {
    let normalised = s.normalized_columns();
    let spacing_bpm = 60.0 * s.bin_spacing_hz();
    let sigma_bins = if spacing_bpm > 0.0 { params.transition_std_bpm / spacing_bpm } else { 1.0 };
    let carved = carve_trace(&normalised, params.smoothing, sigma_bins);
    let present = breath_presence(s, &carved.bins, params.presence_gamma);
    let q_hz = carved.bins.iter().map(|&b| s.bin_frequencies()[b]).collect();
    RateTrace { bins: carved.bins, q_hz, present }
}

/// Peak-to-median test on each column along the trace.
pub fn breath_presence(s: &Spectrogram, bins: &[usize], gamma: f64) -> Vec<bool> {
    bins.iter()
        .enumerate()
        .map(|(w, &b)| {
            let col = s.column(w);
            let mut sorted = col.to_vec();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
            col[b] > 0.0 && col[b] >= gamma * median
        })
        .collect()
}

/// Index of the window whose estimate applies at sample `n`.
pub fn window_for_sample(n: usize, params: &PipelineParams) -> usize {
    let num = n as f64 - params.window_len as f64 + 1.0;
    clamped_ceil(num / params.hop() as f64)
}

/// Rate estimate in BPM at sample `n`.
pub fn rate_at(trace: &RateTrace, n: usize, params: &PipelineParams) -> Result<f64> {
    let w = window_for_sample(n, params);
    trace
        .q_hz
        .get(w)
        .map(|hz| 60.0 * hz)
        .ok_or(Error::OutOfRange { index: w, limit: trace.len() })
}

/// Breath-presence flag at sample `n`.
pub fn presence_at(trace: &RateTrace, n: usize, params: &PipelineParams) -> Result<bool> {
    let w = window_for_sample(n, params);
    trace.present.get(w).copied().ok_or(Error::OutOfRange { index: w, limit: trace.len() })
}
