//! Accuracy metrics and the noise-sweep harness.

mod sweep;

pub use sweep::{
    run_sweep, LevelSummary, MetricReport, NoiseKind, NoiseLevel, RunRow, SweepEntry, SweepFile, SweepSpec,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::numeric::mean_std;
use crate::simulator::GroundTruth;

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Root-mean-square difference.
pub fn rmse_bpm(est: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(est, truth)?;
    let sum: f64 = est.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sum / est.len() as f64).sqrt())
}

/// Percentage of entries whose error is at most `tol`.
pub fn pct_within(est: &[f64], truth: &[f64], tol: f64) -> Result<f64> {
    check_lengths(est, truth)?;
    let hits = est.iter().zip(truth).filter(|(a, b)| (*a - *b).abs() <= tol).count();
    Ok(100.0 * hits as f64 / est.len() as f64)
}

/// Absolute Pearson correlation, `None` if either input is constant.
pub fn abs_corr(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    if sa == 0.0 || sb == 0.0 || !(sa * sb).is_finite() {
        return None;
    }
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64;
    Some((cov / (sa * sb)).abs().min(1.0))
}

/// `|rho|` over every window of `window` samples; entry `i` covers
/// `i..i + window`.
pub fn sliding_abs_corr(r: &[f64], r_est: &[f64], window: usize) -> Result<Vec<Option<f64>>> {
    if r.len() != r_est.len() {
        return Err(Error::LengthMismatch { left: r.len(), right: r_est.len() });
    }
    if window == 0 || window > r.len() {
        return Err(Error::WindowTooLarge { window, len: r.len() });
    }
    Ok((0..=r.len() - window).map(|i| abs_corr(&r[i..i + window], &r_est[i..i + window])).collect())
}

/// Mean and maximum of the defined entries.
pub fn summarize_corr(values: &[Option<f64>]) -> (f64, f64) {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = defined.iter().sum::<f64>() / defined.len() as f64;
    (mean, defined.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub rmse_bpm: f64,
    pub pct_within_3bpm: f64,
    pub mean_abs_corr: f64,
    pub max_abs_corr: f64,
}

/// Rate and waveform metrics from aligned per-sample series.
///
/// `rate` holds `(n, bpm)` pairs; `waveform` starts at sample 0.
pub fn metrics_from_series(
    truth: &GroundTruth,
    rate: &[(usize, f64)],
    waveform: &[f64],
    waveform_len: usize,
) -> Result<RunMetrics> {
    let mut est = Vec::with_capacity(rate.len());
    let mut reference = Vec::with_capacity(rate.len());
    for &(n, bpm) in rate {
        let t = *truth.bpm.get(n).ok_or(Error::OutOfRange { index: n, limit: truth.bpm.len() })?;
        est.push(bpm);
        reference.push(t);
    }
    let len = waveform.len().min(truth.r.len());
    let corr = sliding_abs_corr(&truth.r[..len], &waveform[..len], waveform_len)?;
    let (mean_abs_corr, max_abs_corr) = summarize_corr(&corr);
    Ok(RunMetrics {
        rmse_bpm: rmse_bpm(&est, &reference)?,
        pct_within_3bpm: pct_within(&est, &reference, 3.0)?,
        mean_abs_corr,
        max_abs_corr,
    })
}

/// Metrics of an estimate against simulator ground truth.
pub fn evaluate(truth: &GroundTruth, est: &Estimate, waveform_len: usize) -> Result<RunMetrics> {
    let rate: Vec<(usize, f64)> = est.rate.iter().map(|p| (p.n, p.bpm)).collect();
    metrics_from_series(truth, &rate, &est.waveform, waveform_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn rmse_cases() {
        let t = [15.0, 15.0, 16.0, 14.0];
        assert_eq!(rmse_bpm(&t, &t).unwrap(), 0.0);
        let up: Vec<f64> = t.iter().map(|v| v + 2.0).collect();
        assert!((rmse_bpm(&up, &t).unwrap() - 2.0).abs() < 1e-12);
        let alt: Vec<f64> = t.iter().enumerate().map(|(i, v)| if i % 2 == 0 { v + 3.0 } else { v - 3.0 }).collect();
        assert!((rmse_bpm(&alt, &t).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(rmse_bpm(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(rmse_bpm(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn within_cases() {
        let t = [15.0; 4];
        assert_eq!(pct_within(&t, &t, 3.0).unwrap(), 100.0);
        assert_eq!(pct_within(&[25.0; 4], &t, 3.0).unwrap(), 0.0);
        assert_eq!(pct_within(&[16.0, 14.0, 20.0, 10.0], &t, 3.0).unwrap(), 50.0);
    }

    #[test]
    fn correlation_cases() {
        let r: Vec<f64> = (0..200).map(|i| (i as f64 * 0.3).sin()).collect();
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let aff: Vec<f64> = r.iter().map(|v| 4.0 * v - 7.0).collect();
        for v in sliding_abs_corr(&r, &neg, 50).unwrap() {
            assert!((v.unwrap() - 1.0).abs() < 1e-12);
        }
        for v in sliding_abs_corr(&r, &aff, 50).unwrap() {
            assert!((v.unwrap() - 1.0).abs() < 1e-12);
        }
        // sin against cos over whole periods
        let n = 100;
        let s: Vec<f64> = (0..n).map(|i| (2.0 * PI * 5.0 * i as f64 / n as f64).sin()).collect();
        let c: Vec<f64> = (0..n).map(|i| (2.0 * PI * 5.0 * i as f64 / n as f64).cos()).collect();
        assert!(abs_corr(&s, &c).unwrap() < 1e-12);
    }

    #[test]
    fn constant_windows_are_undefined() {
        let r = vec![1.0; 10];
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let v = sliding_abs_corr(&r, &x, 4).unwrap();
        assert_eq!(v.len(), 7);
        assert!(v.iter().all(Option::is_none));
        assert!(summarize_corr(&v).0.is_nan());
        assert_eq!(summarize_corr(&[Some(0.5), None, Some(1.0)]), (0.75, 1.0));
        assert!(matches!(sliding_abs_corr(&r, &x, 11), Err(Error::WindowTooLarge { .. })));
    }

    proptest! {
        #[test]
        fn rmse_symmetric(a in proptest::collection::vec(-50f64..50.0, 1..40), shift in -5f64..5.0) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v + shift * (i as f64).cos()).collect();
            prop_assert_eq!(rmse_bpm(&a, &b).unwrap(), rmse_bpm(&b, &a).unwrap());
            prop_assert_eq!(rmse_bpm(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn corr_bounded_and_affine_invariant(
            a in proptest::collection::vec(-5f64..5.0, 30),
            b in proptest::collection::vec(-5f64..5.0, 30),
            scale in prop_oneof![-10f64..-0.1, 0.1f64..10.0],
            offset in -10f64..10.0,
        ) {
            if let Some(c) = abs_corr(&a, &b) {
                prop_assert!((0.0..=1.0).contains(&c));
                let a2: Vec<f64> = a.iter().map(|v| scale * v + offset).collect();
                let c2 = abs_corr(&a2, &b).unwrap();
                prop_assert!((c - c2).abs() < 1e-9);
            }
        }
    }
}
