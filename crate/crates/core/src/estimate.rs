//! End-to-end estimation over a CSI recording.
//!
//! Stage 1 runs online: each completed window yields a rate. Whenever at
//! least `waveform_len` samples are available, Stage 2 estimates the
//! waveform over the trailing `waveform_len` samples at that window's rate.
//! The per-window waveforms are then stitched into one stream.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fif::FifConfig;
use crate::numeric::z_score;
use crate::params::PipelineParams;
use crate::rate::{rate_at, presence_at, sliding_rate, SlidingRate};
use crate::tensor::CsiTensor;
use crate::waveform::{estimate_waveform, WaveformEstimate};

/// Rate estimate in force at sample `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub n: usize,
    pub bpm: f64,
    pub present: bool,
}

/// Stage-2 output for the window ending at sample `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowWaveform {
    pub end: usize,
    pub estimate: WaveformEstimate,
}

impl WindowWaveform {
    pub fn start(&self) -> usize {
        self.end + 1 - self.estimate.r.len()
    }
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub sample_period: f64,
    pub rate: Vec<RatePoint>,
    pub windows: Vec<WindowWaveform>,
    /// Stitched waveform for samples `0..waveform.len()`.
    pub waveform: Vec<f64>,
    pub sliding: SlidingRate,
}

/// Run both stages with the default iterative-filtering settings.
pub fn estimate(csi: &CsiTensor, params: &PipelineParams) -> Result<Estimate> {
    estimate_with(csi, params, &FifConfig::with_chi(params.chi))
}

pub fn estimate_with(csi: &CsiTensor, params: &PipelineParams, fif: &FifConfig) -> Result<Estimate> {
    params.validate()?;
    if csi.times() < params.waveform_len {
        return Err(Error::InsufficientSamples { needed: params.waveform_len, got: csi.times() });
    }
    let sliding = sliding_rate(csi, params)?;
    let trace = &sliding.trace;
    let last_end = sliding.window_end(trace.len() - 1, params);

    let rate = (params.window_len - 1..=last_end)
        .map(|n| {
            Ok(RatePoint { n, bpm: rate_at(trace, n, params)?, present: presence_at(trace, n, params)? })
        })
        .collect::<Result<Vec<_>>>()?;

    let ends: Vec<(usize, f64)> = (0..trace.len())
        .map(|w| (sliding.window_end(w, params), trace.q_hz[w]))
        .filter(|&(end, _)| end + 1 >= params.waveform_len)
        .collect();
    let windows = ends
        .par_iter()
        .map(|&(end, hz)| {
            let view = csi.trailing(end, params.waveform_len)?;
            Ok(WindowWaveform { end, estimate: estimate_waveform(&view, hz, params, fif)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let waveform = stitch(&windows)?;

    Ok(Estimate { sample_period: params.sample_period(), rate, windows, waveform, sliding })
}

/// Join per-window waveforms into one stream.
///
/// Each window is z-scored; the first contributes all its samples and every
/// later one appends its new samples, negated if it anti-correlates with the
/// stream over their overlap.
pub fn stitch(windows: &[WindowWaveform]) -> Result<Vec<f64>> {
    let Some(first) = windows.first() else {
        return Ok(Vec::new());
    };
    let mut stream = vec![0.0; first.start()];
    stream.extend(z_score(&first.estimate.r)?);
    for w in &windows[1..] {
        let r = z_score(&w.estimate.r)?;
        let start = w.start();
        if w.end < stream.len() || start > stream.len() {
            return Err(Error::InvalidParams("waveform windows must advance and overlap".into()));
        }
        let overlap = stream.len() - start;
        let dot: f64 = stream[start..].iter().zip(&r[..overlap]).map(|(a, b)| a * b).sum();
        let sign = if dot < 0.0 { -1.0 } else { 1.0 };
        stream.extend(r[overlap..].iter().map(|v| sign * v));
    }
    Ok(stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{simulate, SimConfig};

    fn ww(end: usize, r: Vec<f64>) -> WindowWaveform {
        WindowWaveform { end, estimate: WaveformEstimate { r, source_imf_index: 0, rate_used_bpm: 15.0 } }
    }

    #[test]
    fn stitch_aligns_signs() {
        let base: Vec<f64> = (0..14).map(|i| (i as f64 * 0.9).sin()).collect();
        let a = ww(9, base[0..10].to_vec());
        let b = ww(13, base[4..14].iter().map(|v| -v).collect());
        let s = stitch(&[a, b]).unwrap();
        assert_eq!(s.len(), 14);
        let z_first = z_score(&base[0..10]).unwrap();
        assert_eq!(&s[..10], &z_first[..]);
        let z_second = z_score(&base[4..14]).unwrap();
        for i in 10..14 {
            assert!((s[i] - z_second[i - 4]).abs() < 1e-12);
        }
    }

    #[test]
    fn stitch_rejects_gaps() {
        let a = ww(9, vec![1.0, 2.0, 3.0, 4.0]);
        let b = ww(20, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(stitch(&[a, b]).is_err());
        assert!(stitch(&[]).unwrap().is_empty());
    }

    #[test]
    fn too_short_recording() {
        let config = SimConfig { duration_samples: 599, subcarriers: 8, ..SimConfig::default() };
        let sim = simulate(&config).unwrap();
        let err = estimate(&sim.csi, &PipelineParams::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { needed: 600, got: 599 }));
    }

    #[test]
    fn outputs_cover_expected_samples() {
        let config = SimConfig { duration_samples: 640, subcarriers: 8, ..SimConfig::default() };
        let sim = simulate(&config).unwrap();
        let params = PipelineParams::default();
        let est = estimate(&sim.csi, &params).unwrap();
        assert_eq!(est.rate.first().unwrap().n, 149);
        assert_eq!(est.rate.last().unwrap().n, 639);
        assert_eq!(est.windows.len(), 5);
        assert_eq!(est.waveform.len(), 640);
        assert!(est.rate.iter().all(|p| (p.bpm - 15.0).abs() <= 60.0 * 0.7 / 148.0 + 1e-9));
    }
}
