//! Executes a resolved plan and collects its tables, summary and log lines.

use qfi_core::models::SingleQubitParams;
use qfi_core::oracle::{ground_state_scan, par_map, qfi_single_qubit_analytic};
use qfi_core::protocol::{
    extract_qfi_single, fit_rabi, full_protocol_trace, locate_resonance, measure_qfi_single,
    measure_qfi_two_qubit, rabi_trace, resonance_scan, ModulationSpec, PulseMode,
    SingleQubitSettings, TwoQubitSettings,
};
use qfi_core::ramsey::{
    alpha_sweep, crb_audit, noise_scaling, ramsey_fringe, EstimateSettings, PhotonModel,
};
use qfi_core::units::to_mhz;
use serde_json::{json, Value};

use crate::config::Plan;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Real)
    }
}

/// One data series, written as one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Appended to the file stem; empty for the main series.
    pub suffix: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(suffix: &str, headers: &[&str]) -> Self {
        Self {
            suffix: suffix.to_string(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
    pub summary: Value,
    pub log: Vec<String>,
}

pub fn execute(plan: &Plan) -> Result<Report> {
    match plan {
        Plan::Scan {
            params,
            amplitude,
            tau,
            omegas,
        } => scan(params, *amplitude, *tau, omegas),
        Plan::Rabi {
            params,
            spec,
            pulses,
        } => rabi(params, spec, *pulses),
        Plan::QfiSingle {
            params,
            settings,
            thetas,
        } => qfi_single(params, settings, thetas),
        Plan::QfiTwoQubit {
            params,
            settings,
            betas,
            measure,
        } => qfi_two_qubit(params, settings, betas, *measure),
        Plan::RamseyFringe {
            theta,
            alpha,
            detuning,
            times,
            repetitions,
            model,
            settings,
        } => fringe(
            *theta,
            *alpha,
            *detuning,
            times,
            *repetitions,
            model,
            settings,
        ),
        Plan::NoiseScaling {
            theta,
            beta,
            alpha,
            repetitions,
            model,
            settings,
        } => scaling(*theta, *beta, *alpha, repetitions, model, settings),
        Plan::CrbAudit {
            thetas,
            model,
            settings,
            protocol,
        } => crb(thetas, model, settings, protocol.as_ref()),
        Plan::AlphaSweep {
            theta,
            beta,
            alphas,
            repetitions,
            model,
            settings,
            pulses,
        } => alpha(
            *theta,
            *beta,
            alphas,
            *repetitions,
            model,
            settings,
            *pulses,
        ),
    }
}

fn scan(p: &SingleQubitParams, amplitude: f64, tau: f64, omegas: &[f64]) -> Result<Report> {
    let points = resonance_scan(p, amplitude, omegas, tau)?;
    let mut t = Table::new("", &["omega_rad_per_us", "frequency_MHz", "survival"]);
    for s in &points {
        t.push(vec![
            s.omega.into(),
            to_mhz(s.omega).into(),
            s.survival.into(),
        ]);
    }
    let mut log = vec![format!(
        "scanned {} frequencies at tau = {tau} us",
        points.len()
    )];
    let (min_omega, min_survival) = points
        .iter()
        .min_by(|a, b| a.survival.total_cmp(&b.survival))
        .map(|s| (s.omega, s.survival))
        .unwrap_or((f64::NAN, f64::NAN));
    let resonance = match locate_resonance(&points) {
        Ok(r) => {
            log.push(format!(
                "resonance at {} MHz, probe gap {} MHz",
                to_mhz(r),
                to_mhz(p.gap)
            ));
            json!({
                "omega_rad_per_us": r,
                "frequency_MHz": to_mhz(r),
                "relative_offset": (r - p.gap) / p.gap,
            })
        }
        Err(e) => {
            log.push(format!("no interior resonance: {e}"));
            Value::Null
        }
    };
    Ok(Report {
        tables: vec![t],
        summary: json!({
            "resonance": resonance,
            "spectral_gap_rad_per_us": p.gap,
            "min_survival": min_survival,
            "min_survival_omega_rad_per_us": min_omega,
        }),
        log,
    })
}

fn rabi(p: &SingleQubitParams, spec: &ModulationSpec, pulses: Option<PulseMode>) -> Result<Report> {
    let trace = match pulses {
        Some(mode) => full_protocol_trace(p, spec, mode)?,
        None => rabi_trace(p, spec)?,
    };
    let mut log = vec![format!(
        "{} samples of {} up to {} us",
        trace.times.len(),
        trace.target_label,
        trace.times.last().copied().unwrap_or(0.0)
    )];
    let fit = fit_rabi(&trace);
    let mut t = Table::new("", &["tau_us", "survival", "fit_survival"]);
    for (&tau, &s) in trace.times.iter().zip(&trace.survival) {
        let model = fit.as_ref().ok().map(|f| f.model(tau));
        t.push(vec![tau.into(), s.into(), model.into()]);
    }
    let fit_summary = match &fit {
        Ok(f) => {
            let qfi = extract_qfi_single(f, spec.amplitude, spec.frequency)?;
            log.push(format!("fitted nu = {} rad/us, F = {}", f.nu, qfi.value));
            json!({
                "nu_rad_per_us": f.nu,
                "nu_stderr_rad_per_us": f.nu_stderr,
                "amplitude": f.amplitude,
                "offset": f.offset,
                "rms_residual": f.rms_residual,
                "F": qfi.value,
                "F_stderr": qfi.stderr,
                "F_analytic": qfi_single_qubit_analytic(p.theta).value,
            })
        }
        Err(e) => {
            log.push(format!("fit failed: {e}"));
            json!({ "error": e.to_string() })
        }
    };
    Ok(Report {
        tables: vec![t],
        summary: json!({
            "target": trace.target_label,
            "fit": fit_summary,
            "min_survival": trace.survival.iter().copied().fold(f64::INFINITY, f64::min),
        }),
        log,
    })
}

fn qfi_single(
    p: &SingleQubitParams,
    settings: &SingleQubitSettings,
    thetas: &[f64],
) -> Result<Report> {
    let results = par_map(thetas, |&theta| {
        measure_qfi_single(&p.with_angles(theta, p.beta), settings)
    });
    let mut t = Table::new(
        "",
        &[
            "theta_rad",
            "F_protocol",
            "F_protocol_stderr",
            "F_analytic",
            "resonance_rad_per_us",
            "nu_rad_per_us",
        ],
    );
    let mut log = Vec::new();
    let (mut worst_abs, mut worst_rel): (f64, f64) = (0.0, 0.0);
    for (&theta, r) in thetas.iter().zip(results) {
        let m = r?;
        let exact = qfi_single_qubit_analytic(theta).value;
        worst_abs = worst_abs.max((m.qfi.value - exact).abs());
        worst_rel = worst_rel.max((m.qfi.value - exact).abs() / exact);
        log.push(format!(
            "theta = {theta}: F = {} +- {} (exact {exact})",
            m.qfi.value, m.qfi.stderr
        ));
        t.push(vec![
            theta.into(),
            m.qfi.value.into(),
            m.qfi.stderr.into(),
            exact.into(),
            m.resonance.into(),
            m.fit.nu.into(),
        ]);
    }
    Ok(Report {
        tables: vec![t],
        summary: json!({
            "points": thetas.len(),
            "max_abs_deviation": worst_abs,
            "max_relative_deviation": worst_rel,
        }),
        log,
    })
}

fn qfi_two_qubit(
    p: &qfi_core::models::TwoQubitParams,
    settings: &TwoQubitSettings,
    betas: &[f64],
    measure: bool,
) -> Result<Report> {
    let exact = ground_state_scan(p, betas)?;
    let measured = if measure {
        par_map(betas, |&b| {
            Some(measure_qfi_two_qubit(&p.at_beta(b), settings))
        })
    } else {
        vec![None; betas.len()]
    };
    let mut headers = vec!["beta_rad", "F_exact", "concurrence", "gap_rad_per_us"];
    if measure {
        headers.extend([
            "F_protocol",
            "F_protocol_stderr",
            "F_line2",
            "F_line3",
            "F_line4",
        ]);
    }
    let mut t = Table::new("", &headers);
    let mut log = Vec::new();
    let mut best_f = (f64::NAN, f64::NEG_INFINITY);
    let mut best_c = (f64::NAN, f64::NEG_INFINITY);
    let mut min_gap = (f64::NAN, f64::INFINITY);
    let mut worst_rel: f64 = 0.0;
    let mut failures = 0usize;
    for ((&beta, e), m) in betas.iter().zip(exact).zip(measured) {
        let sample = match e {
            Ok(s) => s,
            Err(err) => {
                log.push(format!("beta = {beta}: no exact value: {err}"));
                let mut row = vec![beta.into()];
                row.resize(t.headers.len(), Cell::Missing);
                t.push(row);
                continue;
            }
        };
        if sample.qfi.value > best_f.1 {
            best_f = (beta, sample.qfi.value);
        }
        if sample.concurrence > best_c.1 {
            best_c = (beta, sample.concurrence);
        }
        if sample.gap() < min_gap.1 {
            min_gap = (beta, sample.gap());
        }
        let mut row = vec![
            beta.into(),
            sample.qfi.value.into(),
            sample.concurrence.into(),
            sample.gap().into(),
        ];
        match m {
            Some(Ok(m)) => {
                let rel = (m.result.qfi.value - sample.qfi.value).abs() / sample.qfi.value;
                worst_rel = worst_rel.max(rel);
                log.push(format!(
                    "beta = {beta}: F = {} (exact {}), {} bright lines",
                    m.result.qfi.value,
                    sample.qfi.value,
                    m.transitions.len()
                ));
                row.push(m.result.qfi.value.into());
                row.push(m.result.qfi.stderr.into());
                for k in 2..=4 {
                    let c = m
                        .transitions
                        .iter()
                        .zip(&m.result.contributions)
                        .find(|(tr, _)| tr.plan.index == k)
                        .map(|(_, c)| *c)
                        .unwrap_or(0.0);
                    row.push(c.into());
                }
            }
            Some(Err(err)) => {
                failures += 1;
                log.push(format!("beta = {beta}: measurement failed: {err}"));
                row.resize(t.headers.len(), Cell::Missing);
            }
            None => {}
        }
        t.push(row);
    }
    let mut summary = json!({
        "points": betas.len(),
        "argmax_F_beta_rad": best_f.0,
        "max_F": best_f.1,
        "argmax_concurrence_beta_rad": best_c.0,
        "max_concurrence": best_c.1,
        "argmin_gap_beta_rad": min_gap.0,
        "min_gap_rad_per_us": min_gap.1,
    });
    if measure {
        summary["max_relative_error"] = json!(worst_rel);
        summary["failed_points"] = json!(failures);
    }
    Ok(Report {
        tables: vec![t],
        summary,
        log,
    })
}

fn estimate_json(e: &qfi_core::ramsey::EstimationResult) -> Value {
    serde_json::to_value(e).expect("estimate serialises")
}

fn fringe(
    theta: f64,
    alpha: f64,
    detuning: f64,
    times: &[f64],
    n: usize,
    model: &PhotonModel,
    settings: &EstimateSettings,
) -> Result<Report> {
    let f = ramsey_fringe(theta, alpha, detuning, times, n, model, settings)?;
    let mut t = Table::new(
        "",
        &[
            "time_us",
            "beta_rad",
            "S_mean",
            "S_mean_stderr",
            "delta_p",
            "p_theory",
        ],
    );
    for p in &f.points {
        t.push(vec![
            p.time.into(),
            p.beta.into(),
            p.s_mean.into(),
            p.s_mean_stderr.into(),
            p.delta_p.into(),
            p.probability.into(),
        ]);
    }
    let log = vec![
        format!("{} fringe points with N = {n}", f.points.len()),
        format!(
            "quadrature: chi = {} +- {}, delta_beta = {}",
            f.quadrature.chi, f.quadrature.chi_stderr, f.quadrature.delta_beta
        ),
    ];
    Ok(Report {
        tables: vec![t],
        summary: json!({
            "offset": f.offset,
            "amplitude": f.amplitude,
            "quadrature": estimate_json(&f.quadrature),
            "quadrature_slope_exact": f.quadrature_slope,
        }),
        log,
    })
}

fn scaling(
    theta: f64,
    beta: f64,
    alpha: f64,
    ns: &[usize],
    model: &PhotonModel,
    settings: &EstimateSettings,
) -> Result<Report> {
    let s = noise_scaling(theta, beta, alpha, ns, model, settings)?;
    let mut t = Table::new(
        "",
        &[
            "N",
            "S_mean",
            "S_mean_stderr",
            "delta_p",
            "delta_p_stderr",
            "delta_p_fit",
        ],
    );
    for p in &s.points {
        let fit = s.delta0 / (p.n as f64).sqrt() + s.xi0;
        t.push(vec![
            Cell::Int(p.n as u64),
            p.s_mean.into(),
            p.s_mean_stderr.into(),
            p.delta_p.into(),
            p.delta_p_stderr.into(),
            fit.into(),
        ]);
    }
    let log = vec![format!(
        "Delta0 = {} (shot noise {}), floor {}, log-log slope {}",
        s.delta0, s.delta0_shot_noise, s.xi0, s.loglog_slope
    )];
    Ok(Report {
        tables: vec![t],
        summary: json!({
            "delta0": s.delta0,
            "xi0": s.xi0,
            "delta0_shot_noise": s.delta0_shot_noise,
            "loglog_slope": s.loglog_slope,
            "loglog_slope_above_floor": s.loglog_slope_above_floor,
        }),
        log,
    })
}

fn crb(
    thetas: &[f64],
    model: &PhotonModel,
    settings: &EstimateSettings,
    protocol: Option<&SingleQubitSettings>,
) -> Result<Report> {
    let a = crb_audit(thetas, model, settings, protocol)?;
    let mut headers = vec![
        "theta_rad",
        "delta_beta",
        "F",
        "ratio",
        "delta_beta_stderr",
        "ratio_stderr",
    ];
    if protocol.is_some() {
        headers.extend(["F_protocol", "F_protocol_stderr"]);
    }
    let mut t = Table::new("", &headers);
    let mut log = Vec::new();
    for p in &a.points {
        let mut row = vec![
            p.theta.into(),
            p.estimate.delta_beta.into(),
            p.f_analytic.into(),
            p.ratio.into(),
            p.estimate.delta_beta_stderr.into(),
            p.ratio_stderr.into(),
        ];
        if protocol.is_some() {
            row.push(p.f_protocol.map(|f| f.value).into());
            row.push(p.f_protocol.map(|f| f.stderr).into());
        }
        log.push(format!(
            "theta = {}: delta_beta*sqrt(F) = {} +- {}",
            p.theta, p.ratio, p.ratio_stderr
        ));
        t.push(row);
    }
    log.push(format!("slope {} +- {}", a.slope, a.slope_stderr));
    let protocol_slope = a
        .slope_protocol
        .map(|(s, e)| json!({ "slope": s, "slope_stderr": e }))
        .unwrap_or(Value::Null);
    Ok(Report {
        tables: vec![t],
        summary: json!({
            "slope": a.slope,
            "slope_stderr": a.slope_stderr,
            "slope_protocol": protocol_slope,
            "bound_holds": a.bound_holds,
        }),
        log,
    })
}

#[allow(clippy::too_many_arguments)]
fn alpha(
    theta: f64,
    beta: f64,
    alphas: &[f64],
    n: usize,
    model: &PhotonModel,
    settings: &EstimateSettings,
    pulses: PulseMode,
) -> Result<Report> {
    let s = alpha_sweep(theta, beta, alphas, n, model, settings, pulses)?;
    let mut t = Table::new(
        "",
        &[
            "alpha_rad",
            "delta_beta",
            "delta_beta_stderr",
            "delta_beta_theory",
            "chi",
            "delta_p",
        ],
    );
    for p in &s.points {
        t.push(vec![
            p.alpha.into(),
            p.estimate.delta_beta.into(),
            p.estimate.delta_beta_stderr.into(),
            p.theory.into(),
            p.estimate.chi.into(),
            p.estimate.delta_p.into(),
        ]);
    }
    let worst = s
        .points
        .iter()
        .map(|p| (p.estimate.delta_beta - p.theory).abs() / p.theory)
        .fold(0.0, f64::max);
    Ok(Report {
        tables: vec![t],
        summary: json!({
            "argmin_alpha_rad": s.argmin_alpha,
            "max_relative_deviation_from_theory": worst,
        }),
        log: vec![format!(
            "{} read-out angles, best alpha = {}",
            s.points.len(),
            s.argmin_alpha
        )],
    })
}
