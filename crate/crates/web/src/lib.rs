//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each exported function returns a JSON string that the page plots. The plain
//! Rust functions behind them are public so they can be tested natively.

use std::f64::consts::PI;

use qfi_core::models::{nuclear_larmor, SingleQubitParams, TwoQubitParams};
use qfi_core::oracle::{ground_state_scan, qfi_single_qubit_analytic};
use qfi_core::protocol::{measure_qfi_single, SingleQubitSettings};
use qfi_core::ramsey::{alpha_sweep, EstimateSettings, PhotonModel};
use qfi_core::units::mhz;
use qfi_core::{QfiError, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulationView {
    pub scan_omega: Vec<f64>,
    pub scan_survival: Vec<f64>,
    pub resonance: f64,
    pub gap: f64,
    pub trace_time: Vec<f64>,
    pub trace_survival: Vec<f64>,
    pub trace_fit: Vec<f64>,
    pub nu: f64,
    pub qfi: f64,
    pub qfi_stderr: f64,
    pub qfi_exact: f64,
}

/// Resonance scan, resonant trace and the QFI it implies for one resource state.
pub fn modulation_view(theta: f64, amplitude: f64, gap_mhz: f64) -> Result<ModulationView> {
    let p = SingleQubitParams {
        gap: mhz(gap_mhz),
        ..SingleQubitParams::default()
    }
    .with_angles(theta, PI / 2.0);
    let settings = SingleQubitSettings {
        amplitude,
        scan_points: 121,
        ..SingleQubitSettings::default()
    };
    let m = measure_qfi_single(&p, &settings)?;
    let trace_fit = m.trace.times.iter().map(|&t| m.fit.model(t)).collect();
    Ok(ModulationView {
        scan_omega: m.scan.iter().map(|s| s.omega).collect(),
        scan_survival: m.scan.iter().map(|s| s.survival).collect(),
        resonance: m.resonance,
        gap: m.spectral_gap,
        trace_time: m.trace.times,
        trace_survival: m.trace.survival,
        trace_fit,
        nu: m.fit.nu,
        qfi: m.qfi.value,
        qfi_stderr: m.qfi.stderr,
        qfi_exact: qfi_single_qubit_analytic(theta).value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairView {
    pub beta: Vec<f64>,
    pub qfi: Vec<f64>,
    pub concurrence: Vec<f64>,
    pub gap: Vec<f64>,
}

/// Ground-state QFI, concurrence and gap of the electron–nuclear pair over β.
/// Points where the ground state is degenerate are skipped.
pub fn pair_view(
    beta_start: f64,
    beta_stop: f64,
    points: usize,
    a_par_mhz: f64,
    a_perp_mhz: f64,
    field_gauss: f64,
) -> Result<PairView> {
    if !(2..=2000).contains(&points) || !(beta_stop > beta_start) {
        return Err(QfiError::Validation(
            "need 2 to 2000 points on an increasing β range".into(),
        ));
    }
    let params = TwoQubitParams {
        a_par: mhz(a_par_mhz),
        a_perp: mhz(a_perp_mhz),
        omega_c: nuclear_larmor(field_gauss),
        ..TwoQubitParams::default()
    };
    let grid: Vec<f64> = (0..points)
        .map(|i| beta_start + (beta_stop - beta_start) * i as f64 / (points - 1) as f64)
        .collect();
    let mut view = PairView {
        beta: Vec::new(),
        qfi: Vec::new(),
        concurrence: Vec::new(),
        gap: Vec::new(),
    };
    for s in ground_state_scan(&params, &grid)?.into_iter().flatten() {
        view.beta.push(s.beta);
        view.qfi.push(s.qfi.value);
        view.concurrence.push(s.concurrence);
        view.gap.push(s.gap());
    }
    Ok(view)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadoutView {
    pub alpha: Vec<f64>,
    pub delta_beta: Vec<f64>,
    pub delta_beta_stderr: Vec<f64>,
    pub theory: Vec<f64>,
    pub best_alpha: f64,
}

/// Single-run sensitivity against the read-out angle with photon-counting noise.
pub fn readout_view(
    theta: f64,
    beta: f64,
    points: usize,
    n0_mean: f64,
    n1_mean: f64,
    seed: u64,
) -> Result<ReadoutView> {
    if !(3..=61).contains(&points) {
        return Err(QfiError::Validation("need 3 to 61 read-out angles".into()));
    }
    let alphas: Vec<f64> = (1..=points)
        .map(|i| PI * i as f64 / (points + 1) as f64)
        .collect();
    let model = PhotonModel {
        n0_mean,
        n1_mean,
        seed,
        ..PhotonModel::default()
    };
    let settings = EstimateSettings {
        replicas: 4000,
        chi_runs: 200_000,
        ..EstimateSettings::default()
    };
    let sweep = alpha_sweep(
        theta,
        beta,
        &alphas,
        1,
        &model,
        &settings,
        Default::default(),
    )?;
    Ok(ReadoutView {
        alpha: alphas,
        delta_beta: sweep.points.iter().map(|p| p.estimate.delta_beta).collect(),
        delta_beta_stderr: sweep
            .points
            .iter()
            .map(|p| p.estimate.delta_beta_stderr)
            .collect(),
        theory: sweep.points.iter().map(|p| p.theory).collect(),
        best_alpha: sweep.argmin_alpha,
    })
}

fn to_json<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = modulationDemo)]
pub fn modulation_demo(
    theta: f64,
    amplitude: f64,
    gap_mhz: f64,
) -> std::result::Result<String, JsError> {
    to_json(modulation_view(theta, amplitude, gap_mhz))
}

#[wasm_bindgen(js_name = pairDemo)]
pub fn pair_demo(
    beta_start: f64,
    beta_stop: f64,
    points: usize,
    a_par_mhz: f64,
    a_perp_mhz: f64,
    field_gauss: f64,
) -> std::result::Result<String, JsError> {
    to_json(pair_view(
        beta_start,
        beta_stop,
        points,
        a_par_mhz,
        a_perp_mhz,
        field_gauss,
    ))
}

#[wasm_bindgen(js_name = readoutDemo)]
pub fn readout_demo(
    theta: f64,
    beta: f64,
    points: usize,
    n0_mean: f64,
    n1_mean: f64,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_json(readout_view(
        theta,
        beta,
        points,
        n0_mean,
        n1_mean,
        seed as u64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulation_recovers_sin_squared() {
        let v = modulation_view(PI / 3.0, 0.1, 15.98).unwrap();
        assert!((v.qfi - 0.75).abs() < 0.02, "{}", v.qfi);
        assert_eq!(v.scan_omega.len(), 121);
        assert_eq!(v.trace_time.len(), v.trace_fit.len());
        assert!((v.resonance - v.gap).abs() / v.gap < 0.02);
    }

    #[test]
    fn pair_peaks_together() {
        let v = pair_view(0.19, 0.59, 81, 11.832, 2.79, 504.0).unwrap();
        let argmax = |x: &[f64]| {
            x.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0
        };
        let i = argmax(&v.qfi);
        let j = argmax(&v.concurrence);
        assert!((v.beta[i] - v.beta[j]).abs() < 0.02);
        assert!(pair_view(0.5, 0.4, 10, 11.8, 2.8, 504.0).is_err());
    }

    #[test]
    fn readout_prefers_quadrature() {
        let v = readout_view(PI / 2.0, PI / 2.0, 9, 400.0, 4.0, 2).unwrap();
        assert_eq!(v.alpha.len(), 9);
        assert!((v.best_alpha - PI / 2.0).abs() < 0.4, "{}", v.best_alpha);
        assert!(readout_view(1.0, 1.0, 1, 400.0, 4.0, 2).is_err());
    }
}
