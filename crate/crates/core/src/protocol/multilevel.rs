//! Multilevel extension: one resonant modulation per ground-state transition of
//! the NV–¹³C pair, each fitted separately.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{fit_rabi, uniform_grid, FitResult, RabiTrace};
use crate::error::{invalid, QfiError, Result};
use crate::models::{
    modulated_two_qubit_hamiltonian, two_qubit_hamiltonian_derivative, TwoQubitParams,
};
use crate::oracle::{concurrence, par_map, two_qubit_spectrum, QfiMethod, QfiValue};
use crate::quantum::{evolution_operator, propagate_sampled, Propagator, PureState};

/// Largest modulation depth used for any transition.
pub const MAX_AMPLITUDE: f64 = 0.2;
/// Transitions j, k are addressable when `|ω_j − ω_k| > 5·max(ν_j, ν_k)`.
pub const ADDRESSABILITY_FACTOR: f64 = 5.0;
/// Relative size of `|⟨Ψ_k|∂H|Ψ₁⟩|` (against A/2) below which a transition is dark.
const DARK_THRESHOLD: f64 = 1e-8;

/// Drive chosen for the transition `1 → index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionPlan {
    /// Level index k (2, 3 or 4).
    pub index: usize,
    /// `ω_k = ε_k − ε₁` (rad/µs).
    pub omega: f64,
    /// `|⟨Ψ_k|∂_βH|Ψ₁⟩|` (rad/µs).
    pub element: f64,
    pub amplitude: f64,
    /// First-order Rabi frequency `a_k·|⟨Ψ_k|∂_βH|Ψ₁⟩|`.
    pub predicted_rabi: f64,
    /// Whether the depth hit [`MAX_AMPLITUDE`].
    pub capped: bool,
}

/// Picks `a_k` so that the first-order Rabi frequency is `target_ratio·ω_k`, capped
/// at [`MAX_AMPLITUDE`]. Dark transitions come back as errors.
pub fn choose_modulation_amplitudes(
    p: &TwoQubitParams,
    target_ratio: f64,
) -> Result<Vec<Result<TransitionPlan>>> {
    if !(target_ratio > 0.0 && target_ratio < 0.25) {
        return Err(invalid(format!(
            "target_ratio must lie in (0, 0.25), got {target_ratio}"
        )));
    }
    let es = two_qubit_spectrum(p)?;
    let dh = two_qubit_hamiltonian_derivative(p)?;
    let dground = dh.apply(es.ground())?;
    let scale = p.gap.abs() / 2.0;
    Ok((1..4)
        .map(|k| {
            let element = es.eigenvectors[k]
                .amplitudes()
                .iter()
                .zip(&dground)
                .map(|(a, b)| a.conj() * b)
                .sum::<num_complex::Complex64>()
                .norm();
            if element < DARK_THRESHOLD * scale {
                return Err(QfiError::DarkTransition {
                    index: k + 1,
                    element,
                });
            }
            let omega = es.eigenvalues[k] - es.eigenvalues[0];
            let wanted = target_ratio * omega / element;
            let amplitude = wanted.min(MAX_AMPLITUDE);
            Ok(TransitionPlan {
                index: k + 1,
                omega,
                element,
                amplitude,
                predicted_rabi: amplitude * element,
                capped: wanted > MAX_AMPLITUDE,
            })
        })
        .collect())
}

/// Survival of `|Ψ₁⟩` while modulating at `omega` with depth `amplitude`, sampled at
/// whole drive periods up to `periods` drive periods. Short windows fall back to a
/// uniform grid.
pub fn transition_trace(
    p: &TwoQubitParams,
    amplitude: f64,
    omega: f64,
    periods: u64,
    samples: usize,
) -> Result<RabiTrace> {
    let es = two_qubit_spectrum(p)?;
    let ground = es.ground().clone();
    let h = modulated_two_qubit_hamiltonian(p, amplitude, omega)?;
    let dt = h.default_time_step();
    let drive_period = TAU / omega;
    let samples = samples.max(2);
    let label = "ground".to_string();

    if (periods as usize) + 1 < 2 * super::MIN_SAMPLES {
        let times = uniform_grid(periods as f64 * drive_period, samples);
        let states = propagate_sampled(&ground, &h, &times, dt)?;
        let survival = states
            .iter()
            .map(|s| s.fidelity(&ground))
            .collect::<Result<Vec<_>>>()?;
        return Ok(RabiTrace {
            times,
            survival,
            target_label: label,
        });
    }

    let one = evolution_operator(&h, 0.0, drive_period, dt)?;
    let mut marks: Vec<u64> = (0..samples)
        .map(|j| ((j as f64) * periods as f64 / (samples - 1) as f64).round() as u64)
        .collect();
    marks.dedup();
    let mut state: PureState = ground.clone();
    let mut at = 0u64;
    let mut cache: Vec<(u64, Propagator)> = Vec::new();
    let mut times = Vec::with_capacity(marks.len());
    let mut survival = Vec::with_capacity(marks.len());
    for n in marks {
        let step = n - at;
        if step > 0 {
            let u = match cache.iter().find(|(k, _)| *k == step) {
                Some((_, u)) => u.clone(),
                None => {
                    let u = one.pow(step);
                    cache.push((step, u.clone()));
                    u
                }
            };
            state = u.apply(&state)?;
            at = n;
        }
        times.push(n as f64 * drive_period);
        survival.push(state.fidelity(&ground)?);
    }
    Ok(RabiTrace {
        times,
        survival,
        target_label: label,
    })
}

/// One fitted transition line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMeasurement {
    pub index: usize,
    pub omega: f64,
    pub amplitude: f64,
    pub nu: f64,
    pub nu_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilevelQfi {
    pub qfi: QfiValue,
    /// `4(ν_k/(a_kω_k))²` per line, in input order.
    pub contributions: Vec<f64>,
}

/// `F = 4 Σ_k (ν_k/(a_k ω_k))²` over the measured lines.
pub fn extract_qfi_multilevel(lines: &[TransitionMeasurement]) -> Result<MultilevelQfi> {
    for l in lines {
        if !(l.omega.is_finite() && l.omega > 0.0) {
            return Err(invalid(format!(
                "transition {} has non-positive frequency {}",
                l.index, l.omega
            )));
        }
        if !(l.amplitude > 0.0 && l.amplitude <= MAX_AMPLITUDE) {
            return Err(invalid(format!(
                "transition {} has modulation depth {} outside (0, {MAX_AMPLITUDE}]",
                l.index, l.amplitude
            )));
        }
    }
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            if (a.omega - b.omega).abs() <= ADDRESSABILITY_FACTOR * a.nu.max(b.nu) {
                return Err(QfiError::Unaddressable {
                    first: a.index,
                    second: b.index,
                });
            }
        }
    }
    let mut value = 0.0;
    let mut variance = 0.0;
    let contributions = lines
        .iter()
        .map(|l| {
            let s = l.amplitude * l.omega;
            let c = 4.0 * (l.nu / s).powi(2);
            value += c;
            variance += (8.0 * l.nu * l.nu_stderr / (s * s)).powi(2);
            c
        })
        .collect();
    Ok(MultilevelQfi {
        qfi: QfiValue {
            value,
            method: QfiMethod::ModulationProtocol,
            stderr: variance.sqrt(),
        },
        contributions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitSettings {
    pub target_ratio: f64,
    /// Rabi periods each trace should cover.
    pub target_periods: f64,
    pub trace_samples: usize,
}

impl Default for TwoQubitSettings {
    fn default() -> Self {
        Self {
            target_ratio: 0.002,
            target_periods: 1.6,
            trace_samples: 121,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub plan: TransitionPlan,
    pub trace: RabiTrace,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitMeasurement {
    pub beta: f64,
    pub energies: Vec<f64>,
    pub concurrence: f64,
    pub transitions: Vec<TransitionRecord>,
    /// Dark transitions `(index, |⟨Ψ_k|∂H|Ψ₁⟩|)`, counted as zero.
    pub dark: Vec<(usize, f64)>,
    pub result: MultilevelQfi,
}

fn measure_line(
    p: &TwoQubitParams,
    plan: TransitionPlan,
    settings: &TwoQubitSettings,
) -> Result<TransitionRecord> {
    // drive periods needed for the requested Rabi periods at the predicted frequency
    let mut periods = (settings.target_periods * plan.omega / plan.predicted_rabi).ceil() as u64;
    let mut last = None;
    for _ in 0..4 {
        let trace = transition_trace(
            p,
            plan.amplitude,
            plan.omega,
            periods,
            settings.trace_samples,
        )?;
        let span = *trace.times.last().unwrap_or(&0.0);
        match fit_rabi(&trace) {
            Ok(fit)
                if fit.periods_in(span)
                    >= settings.target_periods.min(super::MIN_PERIODS + 0.1) =>
            {
                return Ok(TransitionRecord { plan, trace, fit });
            }
            Ok(fit) => {
                periods = (1.1 * settings.target_periods * plan.omega / fit.nu).ceil() as u64
            }
            Err(e) => {
                last = Some(e);
                periods *= 2;
            }
        }
    }
    Err(last.unwrap_or_else(|| invalid(format!("transition {} trace too short", plan.index))))
}

/// Full multilevel measurement at `p.beta`.
pub fn measure_qfi_two_qubit(
    p: &TwoQubitParams,
    settings: &TwoQubitSettings,
) -> Result<TwoQubitMeasurement> {
    p.validate()?;
    if settings.trace_samples < super::MIN_SAMPLES
        || !(settings.target_periods >= super::MIN_PERIODS)
    {
        return Err(invalid(format!(
            "trace_samples must be at least {} and target_periods at least {}",
            super::MIN_SAMPLES,
            super::MIN_PERIODS
        )));
    }
    let es = two_qubit_spectrum(p)?;
    let mut plans = Vec::new();
    let mut dark = Vec::new();
    for plan in choose_modulation_amplitudes(p, settings.target_ratio)? {
        match plan {
            Ok(plan) => plans.push(plan),
            Err(QfiError::DarkTransition { index, element }) => dark.push((index, element)),
            Err(e) => return Err(e),
        }
    }
    let transitions = par_map(&plans, |plan| measure_line(p, *plan, settings))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let lines: Vec<TransitionMeasurement> = transitions
        .iter()
        .map(|r| TransitionMeasurement {
            index: r.plan.index,
            omega: r.plan.omega,
            amplitude: r.plan.amplitude,
            nu: r.fit.nu,
            nu_stderr: r.fit.nu_stderr,
        })
        .collect();
    let result = extract_qfi_multilevel(&lines)?;
    Ok(TwoQubitMeasurement {
        beta: p.beta,
        energies: es.eigenvalues.clone(),
        concurrence: concurrence(es.ground())?,
        transitions,
        dark,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::two_qubit_ground_qfi;
    use crate::units::mhz;

    #[test]
    fn decoupled_pair_has_one_bright_line() {
        let p = TwoQubitParams::decoupled(mhz(15.98), mhz(0.54)).at_beta(0.8);
        let plans = choose_modulation_amplitudes(&p, 0.02).unwrap();
        let bright: Vec<_> = plans.iter().filter_map(|r| r.as_ref().ok()).collect();
        assert_eq!(bright.len(), 1);
        assert_eq!(
            plans
                .iter()
                .filter(|r| matches!(r, Err(QfiError::DarkTransition { .. })))
                .count(),
            2
        );
        let m = measure_qfi_two_qubit(&p, &TwoQubitSettings::default()).unwrap();
        assert!(
            (m.result.qfi.value - 1.0).abs() < 0.05,
            "{:?}",
            m.result.qfi
        );
        assert_eq!(m.dark.len(), 2);
    }

    #[test]
    fn clashing_lines_are_reported() {
        let line = |index, omega| TransitionMeasurement {
            index,
            omega,
            amplitude: 0.1,
            nu: 0.5,
            nu_stderr: 0.0,
        };
        let err =
            extract_qfi_multilevel(&[line(2, 10.0), line(3, 12.0), line(4, 30.0)]).unwrap_err();
        assert!(matches!(
            err,
            QfiError::Unaddressable {
                first: 2,
                second: 3
            }
        ));
        let ok = extract_qfi_multilevel(&[line(2, 10.0), line(4, 30.0)]).unwrap();
        assert!((ok.qfi.value - (4.0 * 0.25 + 4.0 * (0.5f64 / 3.0).powi(2))).abs() < 1e-12);
    }

    #[test]
    fn hyperfine_pair_matches_finite_difference() {
        let p = TwoQubitParams::default().at_beta(0.6);
        let m = measure_qfi_two_qubit(&p, &TwoQubitSettings::default()).unwrap();
        let want = two_qubit_ground_qfi(&p, 1e-4).unwrap().value;
        assert!(
            (m.result.qfi.value - want).abs() / want < 0.1,
            "{} vs {want}",
            m.result.qfi.value
        );
    }
}
