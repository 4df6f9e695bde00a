use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{evaluate, RunMetrics};
use crate::error::{Error, Result};
use crate::estimate::estimate;
use crate::io::fmt_f64;
use crate::params::PipelineParams;
use crate::simulator::{simulate, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Phase,
    Multiplicative,
    Thermal,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Phase => "phase",
            Self::Multiplicative => "multiplicative",
            Self::Thermal => "thermal",
        }
    }
}

/// A phase-noise switch or a noise standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseLevel {
    Switch(bool),
    Std(f64),
}

impl NoiseLevel {
    pub fn label(&self) -> String {
        match self {
            Self::Switch(true) => "on".into(),
            Self::Switch(false) => "off".into(),
            Self::Std(v) => v.to_string(),
        }
    }
}

/// One noise kind swept over several levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub noise_kind: NoiseKind,
    pub levels: Vec<NoiseLevel>,
    pub runs_per_level: usize,
    pub base_config: SimConfig,
}

impl SweepSpec {
    pub fn new(noise_kind: NoiseKind, levels: Vec<NoiseLevel>, base_config: SimConfig) -> Self {
        Self { noise_kind, levels, runs_per_level: 3, base_config }
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.noise_kind.as_str();
        if self.levels.is_empty() {
            return Err(Error::InvalidConfig(format!("{kind} sweep has no levels")));
        }
        if self.runs_per_level == 0 {
            return Err(Error::InvalidConfig(format!("{kind} sweep needs at least one run per level")));
        }
        for level in &self.levels {
            match (self.noise_kind, level) {
                (NoiseKind::Phase, NoiseLevel::Switch(_)) => {}
                (NoiseKind::Phase, NoiseLevel::Std(_)) => {
                    return Err(Error::InvalidConfig("phase noise levels are true/false".into()));
                }
                (_, NoiseLevel::Std(v)) if v.is_finite() && *v >= 0.0 => {}
                _ => return Err(Error::InvalidConfig(format!("bad {kind} noise level {level:?}"))),
            }
        }
        self.base_config.validate()
    }

    /// Simulator settings for one cell; seeds count up from the base seed.
    pub fn config_for(&self, level: NoiseLevel, run: usize) -> SimConfig {
        let mut config = self.base_config.clone();
        config.seed = config.seed.wrapping_add(run as u64);
        match (self.noise_kind, level) {
            (NoiseKind::Phase, NoiseLevel::Switch(on)) => config.noise.phase_noise = on,
            (NoiseKind::Multiplicative, NoiseLevel::Std(v)) => config.noise.mult_std = v,
            (NoiseKind::Thermal, NoiseLevel::Std(v)) => config.noise.thermal_std = v,
            _ => {}
        }
        config
    }
}

/// `[[sweep]]` table of a sweep file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub noise_kind: NoiseKind,
    pub levels: Vec<NoiseLevel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs_per_level: Option<usize>,
}

fn default_runs() -> usize {
    3
}

/// TOML sweep description: shared settings plus one entry per noise kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(default = "default_runs")]
    pub runs_per_level: usize,
    #[serde(default)]
    pub base_config: SimConfig,
    #[serde(default)]
    pub params: PipelineParams,
    pub sweep: Vec<SweepEntry>,
}

impl SweepFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if file.sweep.is_empty() {
            return Err(Error::InvalidConfig("sweep file lists no sweeps".into()));
        }
        for spec in file.specs() {
            spec.validate()?;
        }
        file.params.validate()?;
        Ok(file)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn specs(&self) -> Vec<SweepSpec> {
        self.sweep
            .iter()
            .map(|e| SweepSpec {
                noise_kind: e.noise_kind,
                levels: e.levels.clone(),
                runs_per_level: e.runs_per_level.unwrap_or(self.runs_per_level),
                base_config: self.base_config.clone(),
            })
            .collect()
    }
}

/// One simulated run. Pipeline failures are kept as text.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub noise_kind: NoiseKind,
    pub level: NoiseLevel,
    pub seed: u64,
    pub outcome: std::result::Result<RunMetrics, String>,
}

/// Seed-averaged metrics of one level; `NaN` when every run failed.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub noise_kind: NoiseKind,
    pub level: NoiseLevel,
    pub runs: usize,
    pub failures: usize,
    pub rmse_bpm: f64,
    pub pct_within_3bpm: f64,
    pub mean_abs_corr: f64,
    pub max_abs_corr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<RunRow>,
    pub levels: Vec<LevelSummary>,
}

const ROW_HEADER: &str = "noise_kind,level,seed,rmse_bpm,pct_within_3bpm,mean_abs_corr,max_abs_corr";
const LEVEL_HEADER: &str = "noise_kind,level,runs,failures,rmse_bpm,pct_within_3bpm,mean_abs_corr,max_abs_corr";

fn metric_fields(m: &RunMetrics) -> [f64; 4] {
    [m.rmse_bpm, m.pct_within_3bpm, m.mean_abs_corr, m.max_abs_corr]
}

impl MetricReport {
    pub fn level(&self, kind: NoiseKind, level: NoiseLevel) -> Option<&LevelSummary> {
        self.levels.iter().find(|l| l.noise_kind == kind && l.level == level)
    }

    /// Per-run rows, a blank line, then the per-level averages.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(ROW_HEADER);
        out.push('\n');
        for row in &self.rows {
            let values = row.outcome.as_ref().map_or([f64::NAN; 4], metric_fields);
            let _ = write!(out, "{},{},{}", row.noise_kind.as_str(), row.level.label(), row.seed);
            for v in values {
                let _ = write!(out, ",{}", fmt_f64(v));
            }
            out.push('\n');
        }
        out.push('\n');
        out.push_str(LEVEL_HEADER);
        out.push('\n');
        for l in &self.levels {
            let _ = write!(out, "{},{},{},{}", l.noise_kind.as_str(), l.level.label(), l.runs, l.failures);
            for v in [l.rmse_bpm, l.pct_within_3bpm, l.mean_abs_corr, l.max_abs_corr] {
                let _ = write!(out, ",{}", fmt_f64(v));
            }
            out.push('\n');
        }
        out
    }

    /// Tables of seed-averaged RMSE and mean `|rho|`, one per noise kind,
    /// plus any per-run failures.
    pub fn summary_json(&self) -> serde_json::Value {
        let mut tables = Vec::new();
        for (metric, title) in [("rmse_bpm", "Respiratory rate RMS error (BPM)"), ("mean_abs_corr", "Respiratory waveform correlation (|rho|)")] {
            for kind in [NoiseKind::Phase, NoiseKind::Multiplicative, NoiseKind::Thermal] {
                let rows: Vec<_> = self
                    .levels
                    .iter()
                    .filter(|l| l.noise_kind == kind)
                    .map(|l| {
                        let value = if metric == "rmse_bpm" { l.rmse_bpm } else { l.mean_abs_corr };
                        json!({ "level": l.level.label(), "value": value, "runs": l.runs, "failures": l.failures })
                    })
                    .collect();
                if !rows.is_empty() {
                    tables.push(json!({
                        "title": format!("{title}: {} noise", kind.as_str()),
                        "noise_kind": kind.as_str(),
                        "metric": metric,
                        "rows": rows,
                    }));
                }
            }
        }
        let errors: Vec<_> = self
            .rows
            .iter()
            .filter_map(|r| {
                r.outcome.as_ref().err().map(|e| {
                    json!({ "noise_kind": r.noise_kind.as_str(), "level": r.level.label(), "seed": r.seed, "error": e })
                })
            })
            .collect();
        json!({ "tables": tables, "errors": errors })
    }

    /// [`summary_json`](Self::summary_json) pretty-printed with a trailing newline.
    pub fn summary_json_string(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.summary_json()).expect("json values always serialize");
        text.push('\n');
        text
    }
}

/// Simulate, estimate and score one configuration.
pub fn run_once(config: &SimConfig, params: &PipelineParams) -> Result<RunMetrics> {
    let sim = simulate(config)?;
    let est = estimate(&sim.csi, params)?;
    evaluate(&sim.truth, &est, params.waveform_len)
}

fn average(rows: &[&RunRow]) -> [f64; 4] {
    let ok: Vec<[f64; 4]> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).map(metric_fields).collect();
    let mut out = [f64::NAN; 4];
    if !ok.is_empty() {
        for (i, o) in out.iter_mut().enumerate() {
            *o = ok.iter().map(|m| m[i]).sum::<f64>() / ok.len() as f64;
        }
    }
    out
}

/// Run every (sweep, level, seed) cell on a pool of `jobs` threads.
///
/// Row order follows the input order regardless of `jobs`.
pub fn run_sweep(specs: &[SweepSpec], params: &PipelineParams, jobs: usize) -> Result<MetricReport> {
    params.validate()?;
    for spec in specs {
        spec.validate()?;
    }
    let cells: Vec<(NoiseKind, NoiseLevel, SimConfig)> = specs
        .iter()
        .flat_map(|spec| {
            spec.levels.iter().flat_map(move |&level| {
                (0..spec.runs_per_level).map(move |run| (spec.noise_kind, level, spec.config_for(level, run)))
            })
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let rows: Vec<RunRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|(kind, level, config)| RunRow {
                noise_kind: *kind,
                level: *level,
                seed: config.seed,
                outcome: run_once(config, params).map_err(|e| e.to_string()),
            })
            .collect()
    });

    let mut levels = Vec::new();
    let mut offset = 0;
    for spec in specs {
        for &level in &spec.levels {
            let group: Vec<&RunRow> = rows[offset..offset + spec.runs_per_level].iter().collect();
            offset += spec.runs_per_level;
            let [rmse_bpm, pct_within_3bpm, mean_abs_corr, max_abs_corr] = average(&group);
            levels.push(LevelSummary {
                noise_kind: spec.noise_kind,
                level,
                runs: group.len(),
                failures: group.iter().filter(|r| r.outcome.is_err()).count(),
                rmse_bpm,
                pct_within_3bpm,
                mean_abs_corr,
                max_abs_corr,
            });
        }
    }
    Ok(MetricReport { rows, levels })
}
