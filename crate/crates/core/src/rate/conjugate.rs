use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::unwrap_phase;
use crate::tensor::{CsiView, Link};

/// CSI of every non-reference receive antenna multiplied by the conjugate of
/// the reference antenna (receiver 0) for the same transmitter.
///
/// Phase offsets common to one receiving card cancel in the product.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateLinkSet {
    /// `[link][subcarrier][time]`
    values: Vec<Complex64>,
    links: Vec<Link>,
    subcarriers: usize,
    len: usize,
}

impl ConjugateLinkSet {
    /// Number of derived links, `tx_antennas * (rx_antennas - 1)`.
    pub fn links(&self) -> usize {
        self.links.len()
    }

    /// Source antenna pair of each derived link.
    pub fn link_pairs(&self) -> &[Link] {
        &self.links
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    /// Samples per series.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn series(&self, link: usize, f: usize) -> &[Complex64] {
        let at = (link * self.subcarriers + f) * self.len;
        &self.values[at..at + self.len]
    }

    pub fn magnitude(&self, link: usize, f: usize) -> Vec<f64> {
        self.series(link, f).iter().map(|c| c.norm()).collect()
    }

    /// Phase over time, unwrapped so that whole-turn jumps do not appear as
    /// breathing.
    pub fn phase(&self, link: usize, f: usize) -> Vec<f64> {
        let mut p: Vec<f64> = self.series(link, f).iter().map(|c| c.arg()).collect();
        unwrap_phase(&mut p);
        p
    }
}

/// Conjugate-multiply each link against receiver 0 of the same transmitter.
pub fn conjugate_multiply(window: &CsiView<'_>) -> Result<ConjugateLinkSet> {
    let tensor = window.tensor();
    let rx = tensor.rx_antennas();
    if rx < 2 {
        return Err(Error::TooFewReceivers(rx));
    }
    let k = tensor.subcarriers();
    let len = window.len();
    let mut links = Vec::with_capacity(tensor.tx_antennas() * (rx - 1));
    let mut values = Vec::with_capacity(tensor.tx_antennas() * (rx - 1) * k * len);
    for tx in 0..tensor.tx_antennas() {
        let reference = tensor.link_index(tx, 0);
        for b in 1..rx {
            let link = tensor.link_index(tx, b);
            links.push(Link { tx, rx: b });
            for f in 0..k {
                values.extend((0..len).map(|t| window.get(t, link, f) * window.get(t, reference, f).conj()));
            }
        }
    }
    Ok(ConjugateLinkSet { values, links, subcarriers: k, len })
}
