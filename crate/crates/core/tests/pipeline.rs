use breathtrace::eval::{run_sweep, NoiseKind, NoiseLevel, SweepSpec};
use breathtrace::io;
use breathtrace::rate::sliding_rate;
use breathtrace::{estimate, simulate, PipelineParams, SimConfig};
use proptest::prelude::*;

fn config(seed: u64, bpm: f64, samples: usize) -> SimConfig {
    SimConfig { seed, breath_bpm: bpm, duration_samples: samples, subcarriers: 10, ..SimConfig::default() }
}

#[test]
fn noiseless_rates_stay_within_one_bin() {
    let params = PipelineParams::default();
    let bin = 60.0 * (params.band.f_max - params.band.f_min) / (params.bins() - 1) as f64;
    for bpm in [10.0, 15.0, 24.0, 40.0] {
        let sim = simulate(&config(4, bpm, 700)).unwrap();
        let est = estimate(&sim.csi, &params).unwrap();
        for p in &est.rate {
            assert!((p.bpm - bpm).abs() <= bin, "{bpm} BPM run estimated {} at n={}", p.bpm, p.n);
        }
    }
}

#[test]
fn estimate_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(2, 15.0, 620);
    let sim = simulate(&cfg).unwrap();
    let sidecar = io::write_tensor(dir.path(), &sim.csi, Some(&cfg)).unwrap();
    let (csi, _) = io::read_tensor(&sidecar).unwrap();
    let params = PipelineParams::default();
    let a = estimate(&sim.csi, &params).unwrap();
    let b = estimate(&csi, &params).unwrap();
    assert_eq!(a.rate, b.rate);
    assert_eq!(a.waveform, b.waveform);
}

#[test]
fn sweep_rows_do_not_depend_on_thread_count() {
    let base = SimConfig { subcarriers: 8, duration_samples: 620, ..SimConfig::default() };
    let specs = vec![
        SweepSpec { runs_per_level: 2, ..SweepSpec::new(NoiseKind::Thermal, vec![NoiseLevel::Std(0.5), NoiseLevel::Std(5.0)], base.clone()) },
        SweepSpec::new(NoiseKind::Phase, vec![NoiseLevel::Switch(true)], base),
    ];
    let params = PipelineParams::default();
    let one = run_sweep(&specs, &params, 1).unwrap();
    let three = run_sweep(&specs, &params, 3).unwrap();
    assert_eq!(one.to_csv(), three.to_csv());
    assert_eq!(one.summary_json(), three.summary_json());
    let seeds: Vec<u64> = one.rows.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![1, 2, 1, 2, 1, 2, 3, 1, 2, 3][..seeds.len()].to_vec());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn phase_noise_leaves_stage_one_unchanged(seed in 0u64..1000) {
        let params = PipelineParams::default();
        let quiet = config(seed, 15.0, 300);
        let mut noisy = quiet.clone();
        noisy.noise.phase_noise = true;
        let a = sliding_rate(&simulate(&quiet).unwrap().csi, &params).unwrap();
        let b = sliding_rate(&simulate(&noisy).unwrap().csi, &params).unwrap();
        prop_assert_eq!(&a.trace.bins, &b.trace.bins);
        for w in 0..a.spectrogram.windows() {
            for (x, y) in a.spectrogram.column(w).iter().zip(b.spectrogram.column(w)) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn spectrogram_and_trace_stay_in_range(seed in 0u64..1000, bpm in 8.0f64..50.0, thermal in 0.0f64..3.0) {
        let params = PipelineParams::default();
        let mut cfg = config(seed, bpm, 260);
        cfg.noise.thermal_std = thermal;
        let rate = sliding_rate(&simulate(&cfg).unwrap().csi, &params).unwrap();
        for w in 0..rate.spectrogram.windows() {
            prop_assert!(rate.spectrogram.column(w).iter().all(|&v| v >= 0.0));
        }
        for &hz in &rate.trace.q_hz {
            prop_assert!(hz >= params.band.f_min && hz <= params.band.f_max);
        }
    }

    #[test]
    fn simulation_is_reproducible(seed in 0u64..u64::MAX) {
        let mut cfg = config(seed, 15.0, 40);
        cfg.noise.thermal_std = 0.3;
        cfg.noise.mult_std = 0.2;
        cfg.noise.phase_noise = true;
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        prop_assert_eq!(a.csi, b.csi);
        prop_assert_eq!(a.truth.r, b.truth.r);
    }
}
