use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use breathtrace::eval::{metrics_from_series, run_sweep, SweepFile};
use breathtrace::io::{self, RunManifest};
use breathtrace::{estimate, simulate, Error, PipelineParams, SimConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "breathtrace", version, about = "Respiration monitoring from Wi-Fi CSI")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a CSI recording with ground truth.
    Simulate {
        /// Simulator config (TOML); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate rate and waveform from a CSI tensor.
    Estimate {
        /// Tensor sidecar (`csi.toml`).
        #[arg(long)]
        csi: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a noise sweep and write the report.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Score existing estimate files against ground truth.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        rate: PathBuf,
        #[arg(long)]
        waveform: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 3,
        Error::InsufficientSamples { .. } => 4,
        _ => 2,
    }
}

fn load_params(path: Option<&Path>) -> Result<PipelineParams, Error> {
    path.map_or_else(|| Ok(PipelineParams::default()), io::read_params)
}

fn display(paths: &[&Path]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<(), Error> {
    for (name, body) in files {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn run(cli: Cli, argv: Vec<String>) -> Result<(), Error> {
    let mut manifest = RunManifest::new(argv);
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut sim_config = match &config {
                Some(path) => io::read_sim_config(path)?,
                None => SimConfig::default(),
            };
            if let Some(seed) = seed {
                sim_config.seed = seed;
            }
            fs::create_dir_all(&out)?;
            manifest.seeds = vec![sim_config.seed];
            manifest.inputs = config.iter().map(|p| p.display().to_string()).collect();
            manifest.outputs = [io::SIDECAR_NAME, io::PAYLOAD_NAME, "truth.csv", "config.toml"].map(String::from).to_vec();
            manifest.sim_config = Some(sim_config.clone());
            manifest.write(&out)?;

            let sim = simulate(&sim_config)?;
            io::write_tensor(&out, &sim.csi, Some(&sim_config))?;
            write_outputs(
                &out,
                &[("truth.csv", io::truth_csv(&sim.truth)), ("config.toml", io::sim_config_toml(&sim_config)?)],
            )?;
        }
        Command::Estimate { csi, params, out } => {
            let pipeline = load_params(params.as_deref())?;
            let (tensor, meta) = io::read_tensor(&csi)?;
            fs::create_dir_all(&out)?;
            manifest.seeds = meta.seed.into_iter().collect();
            manifest.inputs = display(&[&csi]);
            manifest.outputs = ["rate.csv", "waveform.csv", "params.toml"].map(String::from).to_vec();
            manifest.params = Some(pipeline.clone());
            manifest.write(&out)?;

            let est = estimate(&tensor, &pipeline)?;
            write_outputs(
                &out,
                &[
                    ("rate.csv", io::rate_csv(&est.rate, est.sample_period)),
                    ("waveform.csv", io::waveform_csv(&est.waveform, est.sample_period)),
                    ("params.toml", io::params_toml(&pipeline)?),
                ],
            )?;
        }
        Command::Sweep { spec, out, jobs } => {
            let file = SweepFile::from_toml_str(&fs::read_to_string(&spec)?)?;
            fs::create_dir_all(&out)?;
            let specs = file.specs();
            manifest.seeds = specs
                .iter()
                .flat_map(|s| (0..s.runs_per_level as u64).map(|r| s.base_config.seed.wrapping_add(r)))
                .collect();
            manifest.seeds.sort_unstable();
            manifest.seeds.dedup();
            manifest.inputs = display(&[&spec]);
            manifest.outputs = ["report.csv", "summary.json", "sweep.toml"].map(String::from).to_vec();
            manifest.sim_config = Some(file.base_config.clone());
            manifest.params = Some(file.params.clone());
            manifest.write(&out)?;

            let report = run_sweep(&specs, &file.params, jobs)?;
            write_outputs(
                &out,
                &[
                    ("report.csv", report.to_csv()),
                    ("summary.json", report.summary_json_string()),
                    ("sweep.toml", file.to_toml_string()?),
                ],
            )?;
        }
        Command::Eval { truth, rate, waveform, params, out } => {
            let pipeline = load_params(params.as_deref())?;
            let truth_data = io::read_truth_csv(&truth)?;
            let rate_data = io::read_rate_csv(&rate)?;
            let wave = io::read_waveform_csv(&waveform)?;
            fs::create_dir_all(&out)?;
            manifest.inputs = display(&[&truth, &rate, &waveform]);
            manifest.outputs = vec!["metrics.csv".into()];
            manifest.params = Some(pipeline.clone());
            manifest.write(&out)?;

            let series: Vec<(usize, f64)> = rate_data.iter().map(|p| (p.n, p.bpm)).collect();
            let m = metrics_from_series(&truth_data, &series, &wave, pipeline.waveform_len)?;
            let body = format!(
                "rmse_bpm,pct_within_3bpm,mean_abs_corr,max_abs_corr\n{},{},{},{}\n",
                io::fmt_f64(m.rmse_bpm),
                io::fmt_f64(m.pct_within_3bpm),
                io::fmt_f64(m.mean_abs_corr),
                io::fmt_f64(m.max_abs_corr)
            );
            write_outputs(&out, &[("metrics.csv", body)])?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
