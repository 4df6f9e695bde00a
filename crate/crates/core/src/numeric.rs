//! Shared numeric helpers: window arithmetic, normalisation and phase handling.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Start indices of overlapping windows of `len` samples, consecutive windows
/// sharing `overlap` samples.
///
/// Window `w` starts at `w * (len - overlap)`; only windows that fit entirely
/// inside `total` samples are returned.
pub fn window_starts(total: usize, len: usize, overlap: usize) -> Result<Vec<usize>> {
    if len == 0 || overlap >= len {
        return Err(Error::InvalidParams(format!(
            "window overlap {overlap} must be smaller than window length {len}"
        )));
    }
    if len > total {
        return Err(Error::InsufficientSamples { needed: len, got: total });
    }
    let hop = len - overlap;
    Ok((0..).map(|w| w * hop).take_while(|s| s + len <= total).collect())
}

/// `max(0, ceil(x))` as an index.
pub fn clamped_ceil(x: f64) -> usize {
    let c = x.ceil();
    if c <= 0.0 {
        0
    } else {
        c as usize
    }
}

/// Z-score normalisation with the population standard deviation.
///
/// A constant sequence maps to all zeros.
pub fn z_score(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: x.len() });
    }
    let (mean, std) = mean_std(x);
    if std == 0.0 || !std.is_finite() {
        return Ok(vec![0.0; x.len()]);
    }
    Ok(x.iter().map(|v| (v - mean) / std).collect())
}

/// Mean and population standard deviation.
pub(crate) fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Remove 2*pi jumps from a phase sequence in place.
///
/// Each sample is shifted by a whole number of turns so that consecutive
/// samples differ by at most pi.
pub fn unwrap_phase(phase: &mut [f64]) {
    let Some(&first) = phase.first() else {
        return;
    };
    let mut turns = 0.0;
    let mut prev = first;
    for p in phase.iter_mut().skip(1) {
        let shifted = *p + turns * 2.0 * PI;
        let k = ((shifted - prev) / (2.0 * PI)).round();
        turns -= k;
        *p += turns * 2.0 * PI;
        prev = *p;
    }
}

/// Index of the first maximum. `None` for an empty slice.
pub(crate) fn first_argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Number of local extrema, counted as sign changes of the first difference.
/// Runs of equal samples collapse into one extremum.
pub fn count_extrema(x: &[f64]) -> usize {
    let mut count = 0;
    let mut last_sign = 0i8;
    for pair in x.windows(2) {
        let d = pair[1] - pair[0];
        let s = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if s == 0 {
            continue;
        }
        if last_sign != 0 && s != last_sign {
            count += 1;
        }
        last_sign = s;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn paper_window_layout() {
        let starts = window_starts(600, 150, 140).unwrap();
        assert_eq!(starts.len(), 46);
        assert_eq!(starts[0], 0);
        assert_eq!(starts[1], 10);
        assert_eq!(*starts.last().unwrap(), 450);
    }

    #[test]
    fn non_overlapping_and_exact_windows() {
        assert_eq!(window_starts(300, 100, 0).unwrap(), vec![0, 100, 200]);
        assert_eq!(window_starts(150, 150, 140).unwrap(), vec![0]);
    }

    #[test]
    fn window_starts_rejects_bad_params() {
        assert!(matches!(window_starts(600, 150, 150), Err(Error::InvalidParams(_))));
        assert!(matches!(
            window_starts(100, 150, 10),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn clamped_ceil_cases() {
        assert_eq!(clamped_ceil(-1.2), 0);
        assert_eq!(clamped_ceil(0.1), 1);
        assert_eq!(clamped_ceil(3.0), 3);
        assert_eq!(clamped_ceil(0.0), 0);
    }

    #[test]
    fn z_score_hand_values() {
        let z = z_score(&[1.0, 2.0, 3.0]).unwrap();
        // (x - 2) / sqrt(2/3)
        assert_abs_diff_eq!(z[0], -1.224_744_871_391_589, epsilon = 1e-15);
        assert_abs_diff_eq!(z[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[2], 1.224_744_871_391_589, epsilon = 1e-15);
    }

    #[test]
    fn z_score_constant_and_short() {
        assert_eq!(z_score(&[5.0; 4]).unwrap(), vec![0.0; 4]);
        assert!(matches!(z_score(&[1.0]), Err(Error::TooShort { .. })));
    }

    #[test]
    fn unwrap_removes_jumps() {
        let truth: Vec<f64> = (0..50).map(|i| i as f64 * 0.4).collect();
        let mut wrapped: Vec<f64> = truth.iter().map(|&p| wrap_phase(p)).collect();
        unwrap_phase(&mut wrapped);
        for (a, b) in wrapped.iter().zip(&truth) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn extrema_with_plateau() {
        assert_eq!(count_extrema(&[0.0, 1.0, 1.0, 0.0, 1.0]), 2);
        assert_eq!(count_extrema(&[1.0, 2.0, 3.0]), 0);
        assert_eq!(count_extrema(&[3.0; 5]), 0);
    }

    proptest! {
        #[test]
        fn window_hop_is_constant(total in 10usize..2000, len in 2usize..200, ov in 0usize..199) {
            prop_assume!(ov < len && len <= total);
            let s = window_starts(total, len, ov).unwrap();
            prop_assert!(!s.is_empty());
            for w in s.windows(2) {
                prop_assert_eq!(w[1] - w[0], len - ov);
            }
            prop_assert!(s.last().unwrap() + len <= total);
            prop_assert!(s.last().unwrap() + (len - ov) + len > total);
        }

        #[test]
        fn z_score_moments(x in proptest::collection::vec(-1e3f64..1e3, 2..200)) {
            let (_, std) = mean_std(&x);
            prop_assume!(std > 1e-6);
            let z = z_score(&x).unwrap();
            let (m, s) = mean_std(&z);
            prop_assert!(m.abs() < 1e-12);
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn z_score_affine(x in proptest::collection::vec(-10f64..10.0, 3..60), a in 0.1f64..5.0, neg in any::<bool>(), b in -50f64..50.0) {
            let (_, std) = mean_std(&x);
            prop_assume!(std > 1e-3);
            let a = if neg { -a } else { a };
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let zx = z_score(&x).unwrap();
            let zy = z_score(&y).unwrap();
            for (p, q) in zx.iter().zip(&zy) {
                prop_assert!((a.signum() * p - q).abs() < 1e-9);
            }
        }

        #[test]
        fn clamped_ceil_monotone(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(clamped_ceil(lo) <= clamped_ceil(hi));
        }

        #[test]
        fn clamped_ceil_idempotent(n in 0usize..1_000_000) {
            prop_assert_eq!(clamped_ceil(n as f64), n);
            prop_assert_eq!(clamped_ceil(clamped_ceil(n as f64) as f64), n);
        }
    }
}
