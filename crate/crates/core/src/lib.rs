//! Quantum Fisher information from parametric-modulation spectroscopy, and a
//! photon-counting Monte Carlo of Ramsey phase estimation against the quantum
//! Cramér-Rao bound.
//!
//! Internal units are µs for time and rad/µs for angular frequency. A frequency
//! quoted as `f` MHz enters as `2π·f` rad/µs; see [`units::mhz`].

pub mod error;
pub mod models;
pub mod oracle;
pub mod protocol;
pub mod quantum;
pub mod ramsey;
pub mod stats;

pub use error::{QfiError, Result};

pub mod units {
    use std::f64::consts::TAU;

    /// Converts a frequency in MHz to angular frequency in rad/µs.
    pub fn mhz(f: f64) -> f64 {
        TAU * f
    }

    /// Converts rad/µs back to MHz.
    pub fn to_mhz(omega: f64) -> f64 {
        omega / TAU
    }
}
