//! Synthetic CSI generator.
//!
//! Each link carries a static component plus one dynamic path per breather
//! whose length is modulated by chest motion. Measurements are then corrupted
//! by log-normal multiplicative noise, additive complex Gaussian noise and a
//! uniformly distributed phase offset common to every antenna on the
//! receiving card.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::tensor::CsiTensor;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Closed interval used for uniform draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

impl ValueRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.max == self.min {
            self.min
        } else {
            rng.random_range(self.min..self.max)
        }
    }

    fn check_positive(&self, name: &str) -> Result<()> {
        if !(self.min > 0.0 && self.min <= self.max && self.max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "{name} range [{}, {}] must be nonempty with positive bounds",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Measurement impairments.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Std of each real and imaginary component of the additive noise.
    pub thermal_std: f64,
    /// Std of the normal underlying the log-normal gain.
    pub mult_std: f64,
    /// Uniform phase offset on `[-pi, pi]`, shared by the receiving card.
    pub phase_noise: bool,
}

/// Everything needed to regenerate a simulated capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub duration_samples: usize,
    pub fs: f64,
    pub subcarriers: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    /// Carrier wavelength in metres.
    pub wavelength: f64,
    /// Spacing between neighbouring antennas of an array, metres.
    pub antenna_separation: f64,
    /// Distance between the transmit and receive arrays, metres.
    pub txrx_separation: f64,
    pub breather_count: usize,
    pub breath_bpm: f64,
    pub breath_phase_offset: f64,
    /// Chest displacement amplitude, metres.
    pub breath_amp_range: ValueRange,
    pub alpha_range: ValueRange,
    pub static_amp_range: ValueRange,
    /// Angle between the dynamic path and the chest motion, radians.
    pub theta: f64,
    pub noise: NoiseConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            // 25 full estimates with the default pipeline parameters.
            duration_samples: 840,
            fs: 9.9,
            subcarriers: 114,
            tx_antennas: 2,
            rx_antennas: 2,
            wavelength: SPEED_OF_LIGHT / 5.18e9,
            antenna_separation: 0.05,
            txrx_separation: 5.0,
            breather_count: 1,
            breath_bpm: 15.0,
            breath_phase_offset: 0.0,
            breath_amp_range: ValueRange::new(0.005, 0.01),
            alpha_range: ValueRange::new(0.2, 2.0),
            static_amp_range: ValueRange::new(10.0, 20.0),
            theta: PI / 3.0,
            noise: NoiseConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.duration_samples == 0 {
            return bad("duration_samples must be at least 1".into());
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return bad(format!("fs {} must be positive", self.fs));
        }
        if self.subcarriers == 0 || self.subcarriers > u16::MAX as usize {
            return bad(format!("subcarriers {} out of range", self.subcarriers));
        }
        if self.tx_antennas == 0 {
            return bad("need at least one transmit antenna".into());
        }
        if self.rx_antennas < 2 {
            return bad(format!("need at least two receive antennas, got {}", self.rx_antennas));
        }
        if self.breather_count == 0 {
            return bad("breather_count must be at least 1".into());
        }
        if self.tx_antennas * self.rx_antennas * self.breather_count > 1 << 16 {
            return bad("too many links".into());
        }
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("breath_bpm", self.breath_bpm),
            ("txrx_separation", self.txrx_separation),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} {v} must be positive"));
            }
        }
        if !(self.antenna_separation >= 0.0 && self.antenna_separation.is_finite()) {
            return bad("antenna_separation must be >= 0".into());
        }
        if !self.theta.is_finite() || !self.breath_phase_offset.is_finite() {
            return bad("theta and breath_phase_offset must be finite".into());
        }
        self.breath_amp_range.check_positive("breath_amp_range")?;
        self.alpha_range.check_positive("alpha_range")?;
        self.static_amp_range.check_positive("static_amp_range")?;
        let n = &self.noise;
        if !(n.thermal_std >= 0.0 && n.thermal_std.is_finite()) {
            return bad(format!("thermal_std {} must be >= 0", n.thermal_std));
        }
        if !(n.mult_std >= 0.0 && n.mult_std.is_finite()) {
            return bad(format!("mult_std {} must be >= 0", n.mult_std));
        }
        Ok(())
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.fs
    }

    fn links(&self) -> usize {
        self.tx_antennas * self.rx_antennas
    }
}

/// Sinusoidal chest displacement of unit amplitude at sample `n`.
pub fn breath_waveform(config: &SimConfig, n: usize) -> f64 {
    breath_at(config, n, config.breath_phase_offset)
}

fn breath_at(config: &SimConfig, n: usize, phase: f64) -> f64 {
    let t = n as f64 * config.sample_period();
    (2.0 * PI * (config.breath_bpm / 60.0) * t + phase).sin()
}

/// Dynamic path of one breather on one link and subcarrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicPath {
    pub alpha: f64,
    pub phase: f64,
    /// +1 or -1: sense in which chest motion rotates the path phase.
    pub direction: f64,
}

/// Per-link random channel parameters, fixed for a whole capture.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraws {
    links: usize,
    subcarriers: usize,
    /// `[link][f]`
    pub static_component: Vec<Complex64>,
    /// `[breather][link][f]`
    pub dynamic: Vec<DynamicPath>,
    /// `[breather][link]`, metres.
    pub breath_depth: Vec<f64>,
    /// `[breather][link]`, metres.
    pub path_length: Vec<f64>,
    /// Phase offset of each breather's waveform.
    pub breath_phase: Vec<f64>,
}

impl ChannelDraws {
    pub fn generate(config: &SimConfig) -> Self {
        let links = config.links();
        let k = config.subcarriers;
        let seed = config.seed;
        let mut static_component = Vec::with_capacity(links * k);
        for link in 0..links {
            let mut amp = stream(seed, Purpose::StaticAmplitude, 0, link as u64);
            let mut ph = stream(seed, Purpose::StaticPhase, 0, link as u64);
            for _ in 0..k {
                let a = config.static_amp_range.sample(&mut amp);
                let p = ph.random_range(0.0..2.0 * PI);
                static_component.push(Complex64::from_polar(a, p));
            }
        }
        let mut dynamic = Vec::with_capacity(config.breather_count * links * k);
        let mut breath_depth = Vec::with_capacity(config.breather_count * links);
        let mut path_length = Vec::with_capacity(config.breather_count * links);
        let mut breath_phase = Vec::with_capacity(config.breather_count);
        for b in 0..config.breather_count {
            let slot = b as u64;
            breath_phase.push(if b == 0 {
                config.breath_phase_offset
            } else {
                stream(seed, Purpose::BreathPhase, slot, 0).random_range(0.0..2.0 * PI)
            });
            for link in 0..links {
                let lane = link as u64;
                let mut amp = stream(seed, Purpose::DynamicAmplitude, slot, lane);
                let mut ph = stream(seed, Purpose::DynamicPhase, slot, lane);
                let mut rot = stream(seed, Purpose::Rotation, slot, lane);
                for _ in 0..k {
                    dynamic.push(DynamicPath {
                        alpha: config.alpha_range.sample(&mut amp),
                        phase: ph.random_range(0.0..2.0 * PI),
                        direction: if rot.random::<bool>() { 1.0 } else { -1.0 },
                    });
                }
                let mut depth = stream(seed, Purpose::BreathDepth, slot, lane);
                breath_depth.push(config.breath_amp_range.sample(&mut depth));
                let tx = link / config.rx_antennas;
                let rx = link % config.rx_antennas;
                path_length.push(path_via_breather(config, b, tx, rx));
            }
        }
        Self {
            links,
            subcarriers: k,
            static_component,
            dynamic,
            breath_depth,
            path_length,
            breath_phase,
        }
    }

    fn dynamic_path(&self, breather: usize, link: usize, f: usize) -> DynamicPath {
        self.dynamic[(breather * self.links + link) * self.subcarriers + f]
    }
}

/// Two uniform linear arrays facing each other, breathers between them.
fn path_via_breather(config: &SimConfig, breather: usize, tx: usize, rx: usize) -> f64 {
    let sep = config.antenna_separation;
    let span = config.txrx_separation;
    let centre = 0.5 * sep * (config.tx_antennas.max(config.rx_antennas) - 1) as f64;
    let person = (0.5 * span, centre + 0.5 * breather as f64);
    let tx_pos = (0.0, tx as f64 * sep);
    let rx_pos = (span, rx as f64 * sep);
    let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    dist(tx_pos, person) + dist(person, rx_pos)
}

/// Noise-free CSI of `link` on subcarrier `f` at sample `n`.
pub fn ideal_csi(config: &SimConfig, draws: &ChannelDraws, n: usize, link: usize, f: usize) -> Complex64 {
    let k = 2.0 * PI / config.wavelength;
    let sin_theta = config.theta.sin();
    let mut h = draws.static_component[link * draws.subcarriers + f];
    for b in 0..draws.breath_phase.len() {
        let path = draws.dynamic_path(b, link, f);
        let idx = b * draws.links + link;
        let r = breath_at(config, n, draws.breath_phase[b]);
        let phase = path.phase
            - k * draws.path_length[idx]
            - path.direction * k * draws.breath_depth[idx] * sin_theta * r;
        h += Complex64::from_polar(path.alpha, phase);
    }
    h
}

/// Random inputs to [`apply_noise`] for one measurement, all standardised.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseDraws {
    /// Standard normal; the gain is `exp(mult_std * log_gain)`.
    pub log_gain: f64,
    /// Independent standard normals for the additive term.
    pub thermal: Complex64,
    /// Phase offset in `[-pi, pi]`.
    pub phase: f64,
}

/// Corrupt one measurement. Disabled impairments leave `h` untouched.
pub fn apply_noise(h: Complex64, noise: &NoiseConfig, draws: &NoiseDraws) -> Complex64 {
    let mut out = h;
    if noise.mult_std > 0.0 {
        out *= (noise.mult_std * draws.log_gain).exp();
    }
    if noise.phase_noise {
        out *= Complex64::from_polar(1.0, -draws.phase);
    }
    if noise.thermal_std > 0.0 {
        out += draws.thermal * noise.thermal_std;
    }
    out
}

/// Ground-truth breathing signal for a capture.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Unit-amplitude chest displacement of the first breather.
    pub r: Vec<f64>,
    /// Instantaneous breathing rate in BPM.
    pub bpm: Vec<f64>,
    pub sample_period: f64,
}

/// Output of [`simulate`].
#[derive(Debug, Clone)]
pub struct Simulation {
    pub csi: CsiTensor,
    pub truth: GroundTruth,
    pub config: SimConfig,
}

/// Generate a noisy capture. Deterministic in `config` (including its seed).
pub fn simulate(config: &SimConfig) -> Result<Simulation> {
    config.validate()?;
    let draws = ChannelDraws::generate(config);
    let links = config.links();
    let k = config.subcarriers;
    let row = links * k;
    let mut samples = vec![Complex64::new(0.0, 0.0); config.duration_samples * row];
    samples.par_chunks_mut(row).enumerate().for_each(|(t, out)| {
        fill_row(config, &draws, t, out);
    });
    let csi = CsiTensor::new(
        samples,
        config.duration_samples,
        config.tx_antennas,
        config.rx_antennas,
        k,
        config.sample_period(),
    )?;
    let truth = GroundTruth {
        r: (0..config.duration_samples).map(|n| breath_waveform(config, n)).collect(),
        bpm: vec![config.breath_bpm; config.duration_samples],
        sample_period: config.sample_period(),
    };
    Ok(Simulation { csi, truth, config: config.clone() })
}

fn fill_row(config: &SimConfig, draws: &ChannelDraws, t: usize, out: &mut [Complex64]) {
    let k = config.subcarriers;
    let noise = &config.noise;
    let seed = config.seed;
    let slot = t as u64;
    // One receiving card: the phase offset depends on (t, f) only.
    let phase_offsets: Vec<f64> = if noise.phase_noise {
        let mut rng = stream(seed, Purpose::PhaseNoise, slot, 0);
        (0..k).map(|_| rng.random_range(-PI..=PI)).collect()
    } else {
        vec![0.0; k]
    };
    for link in 0..config.links() {
        let lane = link as u64;
        let mut mult = (noise.mult_std > 0.0).then(|| stream(seed, Purpose::MultiplicativeNoise, slot, lane));
        let mut thermal = (noise.thermal_std > 0.0).then(|| stream(seed, Purpose::ThermalNoise, slot, lane));
        for f in 0..k {
            let nd = NoiseDraws {
                log_gain: mult.as_mut().map_or(0.0, |r| StandardNormal.sample(r)),
                thermal: thermal.as_mut().map_or(Complex64::new(0.0, 0.0), |r| {
                    Complex64::new(StandardNormal.sample(r), StandardNormal.sample(r))
                }),
                phase: phase_offsets[f],
            };
            out[link * k + f] = apply_noise(ideal_csi(config, draws, t, link, f), noise, &nd);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small() -> SimConfig {
        SimConfig { duration_samples: 200, subcarriers: 8, ..SimConfig::default() }
    }

    #[test]
    fn breath_waveform_landmarks() {
        let c = SimConfig { fs: 10.0, ..SimConfig::default() };
        assert_eq!(breath_waveform(&c, 0), 0.0);
        // 15 BPM has a 4 s period; 1 s is a quarter period.
        assert_abs_diff_eq!(breath_waveform(&c, 10), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn breath_waveform_dominant_bin() {
        let c = SimConfig::default();
        let x: Vec<f64> = (0..600).map(|n| breath_waveform(&c, n)).collect();
        let m = x.len();
        let power = |k: usize| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in x.iter().enumerate() {
                let a = -2.0 * PI * (k * n) as f64 / m as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            re * re + im * im
        };
        let best = (1..m / 2).max_by(|&a, &b| power(a).total_cmp(&power(b))).unwrap();
        let f_best = best as f64 * c.fs / m as f64;
        assert!((f_best - 0.25).abs() <= c.fs / m as f64);
    }

    #[test]
    fn no_dynamic_path_means_static_csi() {
        let c = SimConfig { alpha_range: ValueRange::new(1e-300, 1e-300), ..small() };
        let d = ChannelDraws::generate(&c);
        let h = ideal_csi(&c, &d, 17, 1, 3);
        assert_abs_diff_eq!((h - d.static_component[8 + 3]).norm(), 0.0, epsilon = 1e-290);
    }

    #[test]
    fn paused_breathing_freezes_csi() {
        // A zero breathing rate keeps r(n) = sin(offset) = 0.
        let mut c = small();
        c.breath_bpm = 1e-300;
        let d = ChannelDraws::generate(&c);
        let h0 = ideal_csi(&c, &d, 0, 2, 5);
        for n in [1, 50, 199] {
            assert_eq!(ideal_csi(&c, &d, n, 2, 5), h0);
        }
    }

    #[test]
    fn dynamic_phase_swing() {
        let c = SimConfig::default();
        let swing = 2.0 * PI / c.wavelength * 0.0075 * c.theta.sin() * 2.0;
        assert_abs_diff_eq!(swing, 1.410_297_759_401_926_4, epsilon = 1e-12);
    }

    #[test]
    fn noise_off_is_identity() {
        let h = Complex64::new(3.25, -7.5);
        let d = NoiseDraws { log_gain: 0.7, thermal: Complex64::new(0.3, 0.1), phase: 1.2 };
        let out = apply_noise(h, &NoiseConfig::default(), &d);
        assert_eq!(out.re.to_bits(), h.re.to_bits());
        assert_eq!(out.im.to_bits(), h.im.to_bits());
    }

    #[test]
    fn phase_noise_keeps_modulus() {
        let h = Complex64::new(3.25, -7.5);
        let noise = NoiseConfig { phase_noise: true, ..NoiseConfig::default() };
        for p in [-3.0, -0.5, 0.0, 2.2, PI] {
            let d = NoiseDraws { phase: p, ..NoiseDraws::default() };
            assert_abs_diff_eq!(apply_noise(h, &noise, &d).norm(), h.norm(), epsilon = 1e-12 * h.norm());
        }
    }

    #[test]
    fn thermal_noise_std() {
        let mut c = SimConfig { duration_samples: 1000, subcarriers: 25, ..SimConfig::default() };
        c.alpha_range = ValueRange::new(1e-300, 1e-300);
        c.noise.thermal_std = 0.5;
        let sim = simulate(&c).unwrap();
        let d = ChannelDraws::generate(&c);
        let mut resid = Vec::new();
        for t in 0..c.duration_samples {
            for link in 0..4 {
                for f in 0..25 {
                    let e = sim.csi.get(t, link, f) - d.static_component[link * 25 + f];
                    resid.push(e.re);
                    resid.push(e.im);
                }
            }
        }
        // 2e5 components
        let (m, s) = crate::numeric::mean_std(&resid);
        assert!(m.abs() < 0.01);
        assert!((s - 0.5).abs() / 0.5 < 0.02, "std {s}");
    }

    #[test]
    fn multiplicative_noise_is_median_one() {
        let mut c = small();
        c.noise.mult_std = 0.5;
        let noisy = simulate(&c).unwrap();
        c.noise.mult_std = 0.0;
        let clean = simulate(&c).unwrap();
        let mut logs: Vec<f64> = noisy
            .csi
            .as_slice()
            .iter()
            .zip(clean.csi.as_slice())
            .map(|(a, b)| (a.norm() / b.norm()).ln())
            .collect();
        logs.sort_by(f64::total_cmp);
        let median = logs[logs.len() / 2];
        assert!(median.abs() < 0.05);
        let (_, s) = crate::numeric::mean_std(&logs);
        assert!((s - 0.5).abs() < 0.03);
        // gain is real and positive: phase untouched
        for (a, b) in noisy.csi.as_slice().iter().zip(clean.csi.as_slice()) {
            assert_abs_diff_eq!(a.arg(), b.arg(), epsilon = 1e-12);
        }
    }

    #[test]
    fn simulate_is_deterministic() {
        let mut c = small();
        c.noise = NoiseConfig { thermal_std: 0.3, mult_std: 0.2, phase_noise: true };
        let a = simulate(&c).unwrap();
        let b = simulate(&c).unwrap();
        assert_eq!(a.csi, b.csi);
        c.seed = 2;
        let other = ChannelDraws::generate(&c);
        c.seed = 1;
        let base = ChannelDraws::generate(&c);
        assert_ne!(base.static_component[0].arg(), other.static_component[0].arg());
    }

    #[test]
    fn phase_noise_is_common_to_the_receiver() {
        let mut c = small();
        c.noise.phase_noise = true;
        let noisy = simulate(&c).unwrap();
        c.noise.phase_noise = false;
        let clean = simulate(&c).unwrap();
        for t in [0, 13, 199] {
            for f in 0..c.subcarriers {
                let rot = |link| (noisy.csi.get(t, link, f) / clean.csi.get(t, link, f)).arg();
                let r0 = rot(0);
                for link in 1..4 {
                    assert_abs_diff_eq!(crate::numeric::wrap_phase(rot(link) - r0), 0.0, epsilon = 1e-12);
                }
                // conjugate multiplication cancels it
                let cm_n = noisy.csi.get(t, 1, f) * noisy.csi.get(t, 0, f).conj();
                let cm_c = clean.csi.get(t, 1, f) * clean.csi.get(t, 0, f).conj();
                assert_abs_diff_eq!(crate::numeric::wrap_phase(cm_n.arg() - cm_c.arg()), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_trajectories_are_circular_arcs() {
        let c = small();
        let sim = simulate(&c).unwrap();
        let d = ChannelDraws::generate(&c);
        for link in 0..4 {
            for f in 0..c.subcarriers {
                let centre = d.static_component[link * c.subcarriers + f];
                let radius = d.dynamic[link * c.subcarriers + f].alpha;
                for t in 0..c.duration_samples {
                    let dist = (sim.csi.get(t, link, f) - centre).norm();
                    assert_abs_diff_eq!(dist, radius, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = SimConfig::default();
        c.rx_antennas = 1;
        assert!(matches!(simulate(&c), Err(Error::InvalidConfig(_))));
        let mut c = SimConfig::default();
        c.alpha_range = ValueRange::new(2.0, 1.0);
        assert!(c.validate().is_err());
        let mut c = SimConfig::default();
        c.noise.thermal_std = -1.0;
        assert!(c.validate().is_err());
        let mut c = SimConfig::default();
        c.breather_count = 0;
        assert!(c.validate().is_err());
    }
}
