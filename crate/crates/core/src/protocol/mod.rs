//! Parameter-modulation protocol: resonance scan, Rabi traces, fits and the
//! Fisher-information estimate from the fitted Rabi frequency.

mod fit;
mod multilevel;
mod single;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use fit::{
    fit_rabi, spectral_peak, FitResult, MAX_GUESS_DEVIATION, MAX_RMS_RESIDUAL, MIN_PERIODS,
    MIN_SAMPLES,
};
pub use multilevel::{
    choose_modulation_amplitudes, extract_qfi_multilevel, measure_qfi_two_qubit, transition_trace,
    MultilevelQfi, TransitionMeasurement, TransitionPlan, TransitionRecord, TwoQubitMeasurement,
    TwoQubitSettings, ADDRESSABILITY_FACTOR, MAX_AMPLITUDE,
};
pub use single::{
    extract_qfi_single, full_protocol_trace, locate_resonance, measure_qfi_single, rabi_trace,
    resonance_scan, PulseMode, ScanPoint, SingleQubitMeasurement, SingleQubitSettings,
    RESONANCE_TOLERANCE,
};

/// Drive settings of one modulation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationSpec {
    /// Modulation depth `a` (rad), in (0, 0.2].
    pub amplitude: f64,
    /// Modulation angular frequency ω (rad/µs).
    pub frequency: f64,
    /// Sample times (µs): start at 0, strictly increasing.
    pub tau_grid: Vec<f64>,
}

impl ModulationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude <= MAX_AMPLITUDE) {
            return Err(invalid(format!(
                "modulation amplitude must lie in (0, {MAX_AMPLITUDE}], got {}",
                self.amplitude
            )));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(invalid(format!(
                "modulation frequency must be positive, got {}",
                self.frequency
            )));
        }
        match self.tau_grid.first() {
            Some(&t0) if t0 == 0.0 => {}
            _ => return Err(invalid("tau grid must start at 0")),
        }
        if self
            .tau_grid
            .windows(2)
            .any(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(invalid("tau grid must be strictly increasing and finite"));
        }
        Ok(())
    }
}

/// `n` equally spaced times from 0 to `span`.
pub fn uniform_grid(span: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n).map(|k| span * k as f64 / (n - 1) as f64).collect()
}

/// Survival probability of the initial state sampled over the modulation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiTrace {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    /// Which state the survival refers to, e.g. `"final_state"` or `"ground->2"`.
    pub target_label: String,
}
