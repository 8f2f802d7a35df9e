//! Multi-cycle cyclostationary spectrum sensing for OFDM signals.
//!
//! The crate is organized bottom-up:
//!
//! * [`signals`] synthesizes OFDM primary-user frames, uncertain-variance
//!   complex Gaussian noise and labeled H0/H1 observations.
//! * [`cac`] estimates cyclic autocorrelation and builds the phasor weight
//!   tables used to combine several cyclic frequencies.
//! * [`detectors`] evaluates the multi-cycle ratio statistic, its
//!   single-cycle special case, a lag-ratio baseline and the energy detector.
//! * [`theory`] holds the closed-form false-alarm law, its inverse, the
//!   F-distribution CDF and energy-detector threshold calibration.
//! * [`montecarlo`] runs reproducible, parallel false-alarm and detection
//!   experiments with Wilson confidence intervals.

pub mod cac;
pub mod detectors;
mod error;
pub mod montecarlo;
pub mod signals;
pub mod theory;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Binary hypothesis: noise only (`H0`) or signal plus noise (`H1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Hypothesis::H0 => f.write_str("H0"),
            Hypothesis::H1 => f.write_str("H1"),
        }
    }
}
