//! File formats: CSI tensors, result CSVs, configs and run manifests.
//!
//! A tensor is stored as a TOML sidecar plus a raw payload of little-endian
//! `f64` pairs `(re, im)` in time-major order (time, link, subcarrier). All
//! CSVs use `\n` line endings and print floats with 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::RatePoint;
use crate::params::PipelineParams;
use crate::simulator::{GroundTruth, SimConfig};
use crate::tensor::CsiTensor;

pub const SCHEMA_VERSION: u32 = 1;
pub const SIDECAR_NAME: &str = "csi.toml";
pub const PAYLOAD_NAME: &str = "csi.bin";

/// Round-trippable float text; `NaN` for undefined values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

/// Sidecar describing a tensor payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorMeta {
    pub schema_version: u32,
    pub times: usize,
    pub links: usize,
    pub subcarriers: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub fs: f64,
    pub sample_period: f64,
    /// Payload path relative to the sidecar.
    pub payload: String,
    /// `[tx, rx]` of each link, in payload order.
    pub link_order: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim_config: Option<SimConfig>,
}

impl TensorMeta {
    pub fn describe(csi: &CsiTensor, sim_config: Option<&SimConfig>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            times: csi.times(),
            links: csi.links(),
            subcarriers: csi.subcarriers(),
            tx_antennas: csi.tx_antennas(),
            rx_antennas: csi.rx_antennas(),
            fs: 1.0 / csi.sample_period(),
            sample_period: csi.sample_period(),
            payload: PAYLOAD_NAME.into(),
            link_order: csi.link_order().iter().map(|l| [l.tx, l.rx]).collect(),
            seed: sim_config.map(|c| c.seed),
            sim_config: sim_config.cloned(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported schema version {}", self.schema_version)));
        }
        if self.links != self.tx_antennas * self.rx_antennas {
            return Err(Error::Format(format!(
                "{} links do not match {} x {} antennas",
                self.links, self.tx_antennas, self.rx_antennas
            )));
        }
        let expected: Vec<[usize; 2]> =
            (0..self.tx_antennas).flat_map(|tx| (0..self.rx_antennas).map(move |rx| [tx, rx])).collect();
        if self.link_order != expected {
            return Err(Error::Format("link_order must list links transmitter-major".into()));
        }
        Ok(())
    }
}

fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Format(e.to_string()))
}

fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

/// Write `csi.toml` and `csi.bin` into `dir`; returns the sidecar path.
pub fn write_tensor(dir: &Path, csi: &CsiTensor, sim_config: Option<&SimConfig>) -> Result<PathBuf> {
    let meta = TensorMeta::describe(csi, sim_config);
    let mut bytes = Vec::with_capacity(csi.as_slice().len() * 16);
    for c in csi.as_slice() {
        bytes.extend_from_slice(&c.re.to_le_bytes());
        bytes.extend_from_slice(&c.im.to_le_bytes());
    }
    fs::write(dir.join(PAYLOAD_NAME), bytes)?;
    let sidecar = dir.join(SIDECAR_NAME);
    fs::write(&sidecar, to_toml(&meta)?)?;
    Ok(sidecar)
}

/// Read a tensor from its sidecar. Malformed metadata and payloads of the
/// wrong size are [`Error::Format`].
pub fn read_tensor(sidecar: &Path) -> Result<(CsiTensor, TensorMeta)> {
    let text = fs::read_to_string(sidecar)?;
    let meta: TensorMeta = toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    meta.check()?;
    let payload = sidecar.parent().unwrap_or(Path::new(".")).join(&meta.payload);
    let bytes = fs::read(&payload)?;
    let expected = meta.times * meta.links * meta.subcarriers * 16;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "{} holds {} bytes, expected {expected}",
            payload.display(),
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    let csi = CsiTensor::new(
        samples,
        meta.times,
        meta.tx_antennas,
        meta.rx_antennas,
        meta.subcarriers,
        meta.sample_period,
    )
    .map_err(|e| Error::Format(e.to_string()))?;
    Ok((csi, meta))
}

pub fn truth_csv(truth: &GroundTruth) -> String {
    let mut out = String::from("n,t_seconds,r,bpm\n");
    for (n, (r, bpm)) in truth.r.iter().zip(&truth.bpm).enumerate() {
        let t = n as f64 * truth.sample_period;
        out.push_str(&format!("{n},{},{},{}\n", fmt_f64(t), fmt_f64(*r), fmt_f64(*bpm)));
    }
    out
}

pub fn rate_csv(rate: &[RatePoint], sample_period: f64) -> String {
    let mut out = String::from("n,t_seconds,bpm_estimate,breath_present\n");
    for p in rate {
        let t = p.n as f64 * sample_period;
        out.push_str(&format!("{},{},{},{}\n", p.n, fmt_f64(t), fmt_f64(p.bpm), u8::from(p.present)));
    }
    out
}

pub fn waveform_csv(waveform: &[f64], sample_period: f64) -> String {
    let mut out = String::from("n,t_seconds,r_estimate\n");
    for (n, r) in waveform.iter().enumerate() {
        out.push_str(&format!("{n},{},{}\n", fmt_f64(n as f64 * sample_period), fmt_f64(*r)));
    }
    out
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(csv_error)?;
    let found = reader.headers().map_err(csv_error)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Format(format!("{}: expected header {}", path.display(), header.join(","))));
    }
    reader.records().map(|r| r.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Format(e.to_string())
    }
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize) -> Result<T> {
    record
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad field {i} in row {:?}", record.iter().collect::<Vec<_>>())))
}

/// Rows must be numbered `0, 1, 2, ...`.
fn check_sequence(ns: impl Iterator<Item = usize>) -> Result<()> {
    for (i, n) in ns.enumerate() {
        if i != n {
            return Err(Error::Format(format!("row {i} has sample index {n}")));
        }
    }
    Ok(())
}

pub fn read_truth_csv(path: &Path) -> Result<GroundTruth> {
    let rows = read_rows(path, &["n", "t_seconds", "r", "bpm"])?;
    check_sequence(rows.iter().map(|r| field::<usize>(r, 0)).collect::<Result<Vec<_>>>()?.into_iter())?;
    let sample_period = match rows.get(1) {
        Some(r) => field::<f64>(r, 1)?,
        None => 0.0,
    };
    Ok(GroundTruth {
        r: rows.iter().map(|r| field(r, 2)).collect::<Result<_>>()?,
        bpm: rows.iter().map(|r| field(r, 3)).collect::<Result<_>>()?,
        sample_period,
    })
}

pub fn read_rate_csv(path: &Path) -> Result<Vec<RatePoint>> {
    let rows = read_rows(path, &["n", "t_seconds", "bpm_estimate", "breath_present"])?;
    rows.iter()
        .map(|r| {
            let present: u8 = field(r, 3)?;
            Ok(RatePoint { n: field(r, 0)?, bpm: field(r, 2)?, present: present != 0 })
        })
        .collect()
}

pub fn read_waveform_csv(path: &Path) -> Result<Vec<f64>> {
    let rows = read_rows(path, &["n", "t_seconds", "r_estimate"])?;
    check_sequence(rows.iter().map(|r| field::<usize>(r, 0)).collect::<Result<Vec<_>>>()?.into_iter())?;
    rows.iter().map(|r| field(r, 2)).collect()
}

pub fn read_sim_config(path: &Path) -> Result<SimConfig> {
    let config: SimConfig = read_toml(path)?;
    config.validate()?;
    Ok(config)
}

pub fn read_params(path: &Path) -> Result<PipelineParams> {
    let params: PipelineParams = read_toml(path)?;
    params.validate()?;
    Ok(params)
}

pub fn sim_config_toml(config: &SimConfig) -> Result<String> {
    to_toml(config)
}

pub fn params_toml(params: &PipelineParams) -> Result<String> {
    to_toml(params)
}

/// What was run, with which inputs, to produce an output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub version: String,
    pub timestamp_unix: u64,
    pub seeds: Vec<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim_config: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PipelineParams>,
}

pub const MANIFEST_NAME: &str = "manifest.toml";

impl RunManifest {
    pub fn new(command: Vec<String>) -> Self {
        let timestamp_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            command,
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp_unix,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            sim_config: None,
            params: None,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        fs::write(&path, to_toml(self)?)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_toml(path)
    }
}
