//! Respiration monitoring from Wi-Fi channel state information.
//!
//! The crate estimates a breathing rate and a breathing waveform from CSI
//! captured on a receiver with at least two antennas:
//!
//! * [`rate`] turns overlapping windows of CSI into a spectrogram of
//!   autocorrelation spectra and carves a smooth rate trace through it.
//! * [`waveform`] uses the current rate to pick and sign-align subcarriers,
//!   decomposes the combination with [`fif`] and keeps the mode nearest the
//!   rate.
//! * [`simulator`] generates seeded synthetic captures with thermal,
//!   multiplicative and phase noise; [`eval`] scores estimates and runs
//!   noise sweeps.
//!
//! The guide in `book/` walks through each stage; its code samples are
//! compiled and run as doctests of this crate.

pub mod error;
pub mod estimate;
pub mod eval;
pub mod fif;
pub mod io;
pub mod numeric;
pub mod params;
pub mod rate;
mod rng;
pub mod simulator;
pub mod tensor;
pub mod waveform;

pub use error::{Error, Result};
pub use estimate::{estimate, Estimate};
pub use num_complex::Complex64;
pub use params::{BandLimits, PipelineParams};
pub use simulator::{simulate, GroundTruth, NoiseConfig, SimConfig, Simulation};
pub use tensor::{CsiTensor, CsiView, Link};

// Book chapters are compiled as doctests so their snippets stay current.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/rate.md")]
    mod rate {}
    #[doc = include_str!("../../../book/src/fif.md")]
    mod fif {}
    #[doc = include_str!("../../../book/src/waveform.md")]
    mod waveform {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
