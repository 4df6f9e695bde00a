//! CSI sample storage.
//!
//! Samples are stored time-major: for each time index, every link in link
//! order, and for each link every subcarrier. Links are ordered row-major by
//! transmit antenna, then receive antenna.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A transmit/receive antenna pair, zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub tx: usize,
    pub rx: usize,
}

/// Complex CSI indexed by (time, link, subcarrier).
#[derive(Debug, Clone, PartialEq)]
pub struct CsiTensor {
    samples: Vec<Complex64>,
    times: usize,
    tx_antennas: usize,
    rx_antennas: usize,
    subcarriers: usize,
    sample_period: f64,
}

impl CsiTensor {
    pub fn new(
        samples: Vec<Complex64>,
        times: usize,
        tx_antennas: usize,
        rx_antennas: usize,
        subcarriers: usize,
        sample_period: f64,
    ) -> Result<Self> {
        if times == 0 || subcarriers == 0 || tx_antennas == 0 {
            return Err(Error::InvalidParams(
                "tensor needs at least one time sample, transmit antenna and subcarrier".into(),
            ));
        }
        if rx_antennas < 2 {
            return Err(Error::TooFewReceivers(rx_antennas));
        }
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(Error::InvalidParams(format!("bad sample period {sample_period}")));
        }
        let expected = times * tx_antennas * rx_antennas * subcarriers;
        if samples.len() != expected {
            return Err(Error::LengthMismatch { left: samples.len(), right: expected });
        }
        if samples.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { samples, times, tx_antennas, rx_antennas, subcarriers, sample_period })
    }

    pub fn times(&self) -> usize {
        self.times
    }

    pub fn tx_antennas(&self) -> usize {
        self.tx_antennas
    }

    pub fn rx_antennas(&self) -> usize {
        self.rx_antennas
    }

    pub fn links(&self) -> usize {
        self.tx_antennas * self.rx_antennas
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn link_order(&self) -> Vec<Link> {
        (0..self.tx_antennas)
            .flat_map(|tx| (0..self.rx_antennas).map(move |rx| Link { tx, rx }))
            .collect()
    }

    pub fn link_index(&self, tx: usize, rx: usize) -> usize {
        tx * self.rx_antennas + rx
    }

    #[inline]
    pub fn get(&self, t: usize, link: usize, f: usize) -> Complex64 {
        self.samples[(t * self.links() + link) * self.subcarriers + f]
    }

    /// Raw time-major sample buffer.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn view(&self) -> CsiView<'_> {
        CsiView { tensor: self, start: 0, len: self.times }
    }

    /// A contiguous run of `len` time samples beginning at `start`.
    pub fn window(&self, start: usize, len: usize) -> Result<CsiView<'_>> {
        if len == 0 || start + len > self.times {
            return Err(Error::InsufficientSamples { needed: start + len, got: self.times });
        }
        Ok(CsiView { tensor: self, start, len })
    }

    /// The last `len` samples ending at (and including) time `end`.
    pub fn trailing(&self, end: usize, len: usize) -> Result<CsiView<'_>> {
        if end >= self.times || len == 0 || len > end + 1 {
            return Err(Error::InsufficientSamples { needed: len, got: end.min(self.times) + 1 });
        }
        self.window(end + 1 - len, len)
    }
}

/// Borrowed time window of a [`CsiTensor`].
#[derive(Debug, Clone, Copy)]
pub struct CsiView<'a> {
    tensor: &'a CsiTensor,
    start: usize,
    len: usize,
}

impl<'a> CsiView<'a> {
    pub fn tensor(&self) -> &'a CsiTensor {
        self.tensor
    }

    /// Absolute index of the first sample.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sample at time `t` relative to the window start.
    #[inline]
    pub fn get(&self, t: usize, link: usize, f: usize) -> Complex64 {
        self.tensor.get(self.start + t, link, f)
    }
}
