//! Probe-qubit protocol: scan, Rabi trace and Fisher-information estimate.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{fit_rabi, uniform_grid, FitResult, ModulationSpec, RabiTrace};
use crate::error::{invalid, Result};
use crate::models::{
    check_modulation_amplitude, final_state, free_evolution_hamiltonian, modulated_hamiltonian,
    probe_hamiltonian, y_pulse_hamiltonian, y_rotation, SingleQubitParams,
};
use crate::oracle::{par_map, QfiMethod, QfiValue};
use crate::quantum::{
    eig_hermitian, exp_step, propagate, propagate_sampled, Propagator, PureState,
};

/// Relative distance from the spectral gap within which a drive counts as resonant.
pub const RESONANCE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    /// Modulation frequency (rad/µs).
    pub omega: f64,
    /// Survival probability of the final state after the fixed modulation time.
    pub survival: f64,
}

/// How the preparation and read-out rotations are realised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PulseMode {
    /// Instantaneous rotations.
    #[default]
    Ideal,
    /// Rectangular pulses of Rabi frequency `rabi` with a residual detuning
    /// (both rad/µs), simulated in the frame of the drive carrier.
    Finite { rabi: f64, detuning: f64 },
}

impl PulseMode {
    /// The Y rotation by `angle` as realised by this pulse mode.
    pub fn rotation(&self, angle: f64) -> Result<Propagator> {
        match *self {
            PulseMode::Ideal => Ok(y_rotation(angle)),
            PulseMode::Finite { rabi, detuning } => {
                if !(rabi.is_finite() && rabi > 0.0 && detuning.is_finite()) {
                    return Err(invalid(format!(
                        "finite pulses need a positive Rabi frequency and finite detuning, got {rabi}, {detuning}"
                    )));
                }
                Ok(exp_step(&y_pulse_hamiltonian(rabi, detuning), angle / rabi))
            }
        }
    }
}

fn check_scan_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "scan modulation time must be positive, got {tau}"
        )))
    }
}

/// Survival of the final state after modulating for `tau` at each frequency in
/// `omega_grid`. The grid must span at least `[0.8A, 1.2A]`.
pub fn resonance_scan(
    p: &SingleQubitParams,
    amplitude: f64,
    omega_grid: &[f64],
    tau: f64,
) -> Result<Vec<ScanPoint>> {
    p.validate()?;
    check_modulation_amplitude(amplitude)?;
    check_scan_tau(tau)?;
    let lo = omega_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = omega_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-9 * p.gap;
    if omega_grid.len() < 3 || lo > 0.8 * p.gap + slack || hi < 1.2 * p.gap - slack {
        return Err(invalid(format!(
            "scan grid [{lo}, {hi}] must cover [0.8A, 1.2A] = [{}, {}] with at least 3 points",
            0.8 * p.gap,
            1.2 * p.gap
        )));
    }
    let start = final_state(p.theta, p.beta)?;
    let points = par_map(omega_grid, |&omega| -> Result<ScanPoint> {
        let h = modulated_hamiltonian(p, amplitude, omega)?;
        let end = propagate(&start, &h, 0.0, tau, h.default_time_step())?;
        Ok(ScanPoint {
            omega,
            survival: end.fidelity(&start)?,
        })
    });
    points.into_iter().collect()
}

/// Frequency of the scan minimum, refined by the vertex of the parabola through the
/// lowest point and its neighbours.
pub fn locate_resonance(scan: &[ScanPoint]) -> Result<f64> {
    let mut pts: Vec<ScanPoint> = scan.to_vec();
    pts.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let (i, _) = pts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.survival.total_cmp(&b.1.survival))
        .ok_or_else(|| invalid("empty scan"))?;
    if i == 0 || i + 1 == pts.len() {
        return Err(invalid(format!(
            "scan minimum at the grid edge ({} rad/us); widen the scan",
            pts[i].omega
        )));
    }
    let (x0, x1, x2) = (pts[i - 1].omega, pts[i].omega, pts[i + 1].omega);
    let (y0, y1, y2) = (pts[i - 1].survival, pts[i].survival, pts[i + 1].survival);
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den.abs() < 1e-300 {
        return Ok(x1);
    }
    let vertex = x1 - 0.5 * num / den;
    Ok(vertex.clamp(x0, x2))
}

fn spectral_gap(p: &SingleQubitParams) -> Result<f64> {
    let eig = eig_hermitian(&probe_hamiltonian(p)?)?;
    Ok(eig.eigenvalues[1] - eig.eigenvalues[0])
}

fn check_resonant(p: &SingleQubitParams, spec: &ModulationSpec) -> Result<()> {
    spec.validate()?;
    let gap = spectral_gap(p)?;
    if (spec.frequency - gap).abs() >= RESONANCE_TOLERANCE * gap {
        return Err(invalid(format!(
            "modulation frequency {} rad/us is not within {RESONANCE_TOLERANCE} of the gap {gap} rad/us",
            spec.frequency
        )));
    }
    Ok(())
}

/// Survival of the final state `|⟨ψ_f|ψ(τ)⟩|²` under resonant modulation.
pub fn rabi_trace(p: &SingleQubitParams, spec: &ModulationSpec) -> Result<RabiTrace> {
    p.validate()?;
    check_resonant(p, spec)?;
    let start = final_state(p.theta, p.beta)?;
    let h = modulated_hamiltonian(p, spec.amplitude, spec.frequency)?;
    let states = propagate_sampled(&start, &h, &spec.tau_grid, h.default_time_step())?;
    let survival = states
        .iter()
        .map(|s| s.fidelity(&start))
        .collect::<Result<Vec<_>>>()?;
    Ok(RabiTrace {
        times: spec.tau_grid.clone(),
        survival,
        target_label: "final_state".into(),
    })
}

/// Complete sequence from |0⟩: `Y_θ`, free evolution for `T = β/ξ`, modulation for
/// τ, then `Y_π`, free evolution for `T` and `Y_{π−θ}`. Returns the |0⟩ population,
/// which equals the final-state survival for ideal pulses.
pub fn full_protocol_trace(
    p: &SingleQubitParams,
    spec: &ModulationSpec,
    pulses: PulseMode,
) -> Result<RabiTrace> {
    p.validate()?;
    check_resonant(p, spec)?;
    if !(p.detuning > 0.0) {
        return Err(invalid(format!(
            "free-evolution detuning must be positive, got {}",
            p.detuning
        )));
    }
    let wait = p.beta / p.detuning;
    let free = exp_step(&free_evolution_hamiltonian(p.detuning), wait);
    let prepare = pulses.rotation(p.theta)?.then(&free);
    let readout = pulses
        .rotation(std::f64::consts::PI)?
        .then(&free)
        .then(&pulses.rotation(std::f64::consts::PI - p.theta)?);

    let start = prepare.apply(&PureState::basis(2, 0)?)?;
    let h = modulated_hamiltonian(p, spec.amplitude, spec.frequency)?;
    let states = propagate_sampled(&start, &h, &spec.tau_grid, h.default_time_step())?;
    let survival = states
        .iter()
        .map(|s| readout.apply(s).map(|out| out.population(0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RabiTrace {
        times: spec.tau_grid.clone(),
        survival,
        target_label: "ground_population".into(),
    })
}

/// `F = 4(ν/(aω))²` from a fitted Rabi frequency, with the propagated fit error.
pub fn extract_qfi_single(fit: &FitResult, amplitude: f64, omega: f64) -> Result<QfiValue> {
    check_modulation_amplitude(amplitude)?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(invalid(format!(
            "modulation frequency must be positive, got {omega}"
        )));
    }
    let scale = amplitude * omega;
    Ok(QfiValue {
        value: 4.0 * (fit.nu / scale).powi(2),
        method: QfiMethod::ModulationProtocol,
        stderr: 8.0 * fit.nu * fit.nu_stderr / (scale * scale),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitSettings {
    pub amplitude: f64,
    pub scan_points: usize,
    /// Modulation time of the resonance scan (µs).
    pub scan_tau: f64,
    pub trace_samples: usize,
    /// Oscillation periods the trace should cover.
    pub target_periods: f64,
    /// `None` samples the final-state survival directly.
    pub pulses: Option<PulseMode>,
}

impl Default for SingleQubitSettings {
    fn default() -> Self {
        Self {
            amplitude: 0.1,
            scan_points: 81,
            scan_tau: 0.45,
            trace_samples: 81,
            target_periods: 1.5,
            pulses: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitMeasurement {
    pub scan: Vec<ScanPoint>,
    pub resonance: f64,
    /// Exact gap of the probe Hamiltonian, for comparison with the scan.
    pub spectral_gap: f64,
    pub trace: RabiTrace,
    pub fit: FitResult,
    pub qfi: QfiValue,
}

/// Scan, locate the dip, record a resonant trace long enough for the target number
/// of periods, fit it and convert ν to a Fisher information.
pub fn measure_qfi_single(
    p: &SingleQubitParams,
    settings: &SingleQubitSettings,
) -> Result<SingleQubitMeasurement> {
    p.validate()?;
    if settings.trace_samples < super::MIN_SAMPLES {
        return Err(invalid(format!(
            "trace_samples must be at least {}",
            super::MIN_SAMPLES
        )));
    }
    let grid = uniform_grid(0.4 * p.gap, settings.scan_points.max(3))
        .into_iter()
        .map(|x| 0.8 * p.gap + x)
        .collect::<Vec<_>>();
    let scan = resonance_scan(p, settings.amplitude, &grid, settings.scan_tau)?;
    let resonance = locate_resonance(&scan)?;

    // the fastest possible oscillation has ν = aω/2; lengthen the window until the
    // fit sees enough periods
    let mut window = settings.target_periods * TAU / (settings.amplitude * resonance / 2.0);
    let mut last_err = None;
    for _ in 0..8 {
        let spec = ModulationSpec {
            amplitude: settings.amplitude,
            frequency: resonance,
            tau_grid: uniform_grid(window, settings.trace_samples),
        };
        let trace = match settings.pulses {
            None => rabi_trace(p, &spec)?,
            Some(mode) => full_protocol_trace(p, &spec, mode)?,
        };
        match fit_rabi(&trace) {
            Ok(fit) if fit.periods_in(window) >= settings.target_periods => {
                let qfi = extract_qfi_single(&fit, settings.amplitude, resonance)?;
                return Ok(SingleQubitMeasurement {
                    scan,
                    resonance,
                    spectral_gap: spectral_gap(p)?,
                    trace,
                    fit,
                    qfi,
                });
            }
            Ok(fit) => window = 1.1 * settings.target_periods * TAU / fit.nu,
            Err(e) => {
                last_err = Some(e);
                window *= 2.0;
            }
        }
    }
    Err(last_err
        .unwrap_or_else(|| invalid("Rabi trace never covered the target number of periods")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::qfi_single_qubit_analytic;
    use std::f64::consts::PI;

    #[test]
    fn scan_dip_sits_at_the_gap() {
        let p = SingleQubitParams::default();
        let grid: Vec<f64> = (0..81).map(|k| p.gap * (0.8 + 0.005 * k as f64)).collect();
        let scan = resonance_scan(&p, 0.1, &grid, 0.45).unwrap();
        let w = locate_resonance(&scan).unwrap();
        assert!((w - p.gap).abs() / p.gap < 0.005, "{w} vs {}", p.gap);
        let narrow: Vec<f64> = grid.iter().copied().filter(|w| *w < p.gap).collect();
        assert!(resonance_scan(&p, 0.1, &narrow, 0.45).is_err());
    }

    #[test]
    fn off_resonant_trace_is_refused() {
        let p = SingleQubitParams::default();
        let spec = ModulationSpec {
            amplitude: 0.1,
            frequency: 1.05 * p.gap,
            tau_grid: uniform_grid(1.0, 20),
        };
        assert!(rabi_trace(&p, &spec).is_err());
    }

    #[test]
    fn ideal_full_protocol_matches_direct_trace() {
        let p = SingleQubitParams::default().with_angles(PI / 3.0, 1.1);
        let spec = ModulationSpec {
            amplitude: 0.1,
            frequency: p.gap,
            tau_grid: uniform_grid(2.0, 15),
        };
        let a = rabi_trace(&p, &spec).unwrap();
        let b = full_protocol_trace(&p, &spec, PulseMode::Ideal).unwrap();
        for (x, y) in a.survival.iter().zip(&b.survival) {
            assert!((x - y).abs() < 1e-10, "{x} {y}");
        }
        assert!((b.survival[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measured_qfi_tracks_sin_squared() {
        let p = SingleQubitParams::default();
        let m = measure_qfi_single(&p, &SingleQubitSettings::default()).unwrap();
        let want = qfi_single_qubit_analytic(p.theta).value;
        assert!(
            (m.qfi.value - want).abs() / want < 0.05,
            "{} vs {want}",
            m.qfi.value
        );
        assert!(m.fit.periods_in(*m.trace.times.last().unwrap()) >= 1.5);
    }
}
