//! Sweeps built on the single-point estimator.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::sampling::derive_seed;
use super::{
    check_angle, estimate, estimate_curve, ramsey_probability, ramsey_sensitivity, spread,
    EstimateSettings, EstimationResult, PhotonModel, Spread,
};
use crate::error::{invalid, QfiError, Result};
use crate::models::{final_state, SingleQubitParams};
use crate::oracle::{qfi_single_qubit_analytic, QfiValue};
use crate::protocol::{measure_qfi_single, PulseMode, SingleQubitSettings};
use crate::stats::{linear_fit, proportional_fit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    /// Free-evolution time T (µs).
    pub time: f64,
    /// Accumulated phase ξT (rad).
    pub beta: f64,
    pub s_mean: f64,
    pub s_mean_stderr: f64,
    pub delta_p: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fringe {
    pub points: Vec<FringePoint>,
    /// Least-squares `S ≈ offset + amplitude·cos β`.
    pub offset: f64,
    pub amplitude: f64,
    /// Full estimate at β = π/2.
    pub quadrature: EstimationResult,
    /// Exact slope at β = π/2.
    pub quadrature_slope: f64,
}

/// `S(β)` along free-evolution times with `β = ξT`.
pub fn ramsey_fringe(
    theta: f64,
    alpha: f64,
    detuning: f64,
    times: &[f64],
    n: usize,
    model: &PhotonModel,
    settings: &EstimateSettings,
) -> Result<Fringe> {
    check_angle("theta", theta)?;
    check_angle("alpha", alpha)?;
    if !(detuning.is_finite() && detuning != 0.0) {
        return Err(invalid(format!(
            "detuning must be finite and non-zero, got {detuning}"
        )));
    }
    if times.len() < 3 || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(invalid("fringe needs at least 3 non-negative times"));
    }
    let mut points = Vec::with_capacity(times.len());
    for (i, &time) in times.iter().enumerate() {
        let beta = detuning * time;
        let p = ramsey_probability(theta, beta, alpha);
        let sp: Spread = spread(
            p,
            n,
            &model.with_seed(derive_seed(model.seed, i as u64)),
            settings,
        )?;
        points.push(FringePoint {
            time,
            beta,
            s_mean: sp.s_mean,
            s_mean_stderr: sp.s_mean_stderr,
            delta_p: sp.delta_p,
            probability: p,
        });
    }
    let cos: Vec<f64> = points.iter().map(|p| p.beta.cos()).collect();
    let s: Vec<f64> = points.iter().map(|p| p.s_mean).collect();
    let (offset, amplitude) = linear_fit(&cos, &s).ok_or(QfiError::FitFailed {
        initial_guess: 0.0,
        residual: f64::NAN,
    })?;
    let quadrature = estimate(
        theta,
        FRAC_PI_2,
        alpha,
        n,
        &model.with_seed(derive_seed(model.seed, times.len() as u64)),
        settings,
    )?;
    Ok(Fringe {
        points,
        offset,
        amplitude,
        quadrature,
        quadrature_slope: super::ramsey_slope(theta, FRAC_PI_2, alpha),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseScaling {
    pub points: Vec<Spread>,
    /// Fit `Δp ≈ Δ₀/√N + ξ₀` with `ξ₀ ≥ 0`.
    pub delta0: f64,
    pub xi0: f64,
    /// `sqrt(p(1 − p))`.
    pub delta0_shot_noise: f64,
    /// Slope of ln Δp against ln N.
    pub loglog_slope: f64,
    /// Slope of ln(Δp − ξ₀) against ln N, over points above the floor.
    pub loglog_slope_above_floor: f64,
}

/// Δp across repetition counts, with the shot-noise-plus-floor fit.
pub fn noise_scaling(
    theta: f64,
    beta: f64,
    alpha: f64,
    n_grid: &[usize],
    model: &PhotonModel,
    settings: &EstimateSettings,
) -> Result<NoiseScaling> {
    check_angle("theta", theta)?;
    check_angle("alpha", alpha)?;
    let lo = n_grid.iter().copied().min().unwrap_or(0);
    let hi = n_grid.iter().copied().max().unwrap_or(0);
    let mut distinct = n_grid.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 5 || lo == 0 || (hi as f64) < 10.0 * lo as f64 {
        return Err(invalid(
            "N grid needs at least 5 distinct positive values spanning a decade",
        ));
    }
    let p = ramsey_probability(theta, beta, alpha);
    let points = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            spread(
                p,
                n,
                &model.with_seed(derive_seed(model.seed, i as u64)),
                settings,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let x: Vec<f64> = points.iter().map(|s| 1.0 / (s.n as f64).sqrt()).collect();
    let y: Vec<f64> = points.iter().map(|s| s.delta_p).collect();
    let fail = || QfiError::FitFailed {
        initial_guess: 0.0,
        residual: f64::NAN,
    };
    let (mut xi0, mut delta0) = linear_fit(&x, &y).ok_or_else(fail)?;
    if xi0 < 0.0 {
        xi0 = 0.0;
        delta0 = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()
            / x.iter().map(|a| a * a).sum::<f64>();
    }
    let ln_n: Vec<f64> = points.iter().map(|s| (s.n as f64).ln()).collect();
    let ln_dp: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (_, loglog_slope) = linear_fit(&ln_n, &ln_dp).ok_or_else(fail)?;
    let above: (Vec<f64>, Vec<f64>) = ln_n
        .iter()
        .zip(&y)
        .filter(|(_, v)| **v > xi0)
        .map(|(l, v)| (*l, (v - xi0).ln()))
        .unzip();
    let loglog_slope_above_floor = linear_fit(&above.0, &above.1)
        .map(|f| f.1)
        .unwrap_or(f64::NAN);
    if !(delta0.is_finite() && xi0.is_finite()) {
        return Err(fail());
    }
    Ok(NoiseScaling {
        points,
        delta0,
        xi0,
        delta0_shot_noise: (p * (1.0 - p)).sqrt(),
        loglog_slope,
        loglog_slope_above_floor,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbPoint {
    pub theta: f64,
    pub estimate: EstimationResult,
    pub f_analytic: f64,
    pub f_protocol: Option<QfiValue>,
    /// `δβ·sqrt(F_analytic)`.
    pub ratio: f64,
    pub ratio_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbAudit {
    pub points: Vec<CrbPoint>,
    /// Weighted fit of δβ against `1/sqrt(F_analytic)` through the origin.
    pub slope: f64,
    pub slope_stderr: f64,
    /// Same fit against the protocol estimate of F, when measured.
    pub slope_protocol: Option<(f64, f64)>,
    /// Whether `ratio ≥ 1 − 3σ` held at every point.
    pub bound_holds: bool,
}

/// Optimal-basis estimates (α = β = π/2, N = 1) across θ, compared with the
/// Cramér–Rao limit. With `protocol` set, F is also measured by modulation.
pub fn crb_audit(
    theta_grid: &[f64],
    model: &PhotonModel,
    settings: &EstimateSettings,
    protocol: Option<&SingleQubitSettings>,
) -> Result<CrbAudit> {
    if theta_grid.is_empty() {
        return Err(invalid("theta grid is empty"));
    }
    for &t in theta_grid {
        if !(t > 1e-6 && t < PI - 1e-6) {
            return Err(invalid(format!("theta grid must avoid 0 and π, got {t}")));
        }
    }
    let mut points = Vec::with_capacity(theta_grid.len());
    for (i, &theta) in theta_grid.iter().enumerate() {
        let est = estimate(
            theta,
            FRAC_PI_2,
            FRAC_PI_2,
            1,
            &model.with_seed(derive_seed(model.seed, i as u64)),
            settings,
        )?;
        let f_analytic = qfi_single_qubit_analytic(theta).value;
        let f_protocol = match protocol {
            Some(s) => {
                let p = SingleQubitParams::default().with_angles(theta, FRAC_PI_2);
                Some(measure_qfi_single(&p, s)?.qfi)
            }
            None => None,
        };
        let root = f_analytic.sqrt();
        points.push(CrbPoint {
            theta,
            estimate: est,
            f_analytic,
            f_protocol,
            ratio: est.delta_beta * root,
            ratio_stderr: est.delta_beta_stderr * root,
        });
    }
    let fit = |fs: &[f64]| {
        let x: Vec<f64> = fs.iter().map(|f| 1.0 / f.sqrt()).collect();
        let y: Vec<f64> = points.iter().map(|p| p.estimate.delta_beta).collect();
        let s: Vec<f64> = points
            .iter()
            .map(|p| p.estimate.delta_beta_stderr)
            .collect();
        proportional_fit(&x, &y, &s)
    };
    let analytic: Vec<f64> = points.iter().map(|p| p.f_analytic).collect();
    let (slope, slope_stderr) = fit(&analytic).ok_or(QfiError::FitFailed {
        initial_guess: 1.0,
        residual: f64::NAN,
    })?;
    let slope_protocol = if points.iter().all(|p| p.f_protocol.is_some()) && protocol.is_some() {
        let f: Vec<f64> = points.iter().map(|p| p.f_protocol.unwrap().value).collect();
        fit(&f)
    } else {
        None
    };
    let bound_holds = points.iter().all(|p| p.ratio >= 1.0 - 3.0 * p.ratio_stderr);
    Ok(CrbAudit {
        points,
        slope,
        slope_stderr,
        slope_protocol,
        bound_holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub estimate: EstimationResult,
    /// Ideal-pulse single-run sensitivity.
    pub theory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweep {
    pub points: Vec<AlphaPoint>,
    pub argmin_alpha: f64,
}

/// δβ against the read-out angle α. With finite pulses the read-out rotation
/// `Y_α` is the detuned pulse of `pulses`.
pub fn alpha_sweep(
    theta: f64,
    beta: f64,
    alpha_grid: &[f64],
    n: usize,
    model: &PhotonModel,
    settings: &EstimateSettings,
    pulses: PulseMode,
) -> Result<AlphaSweep> {
    check_angle("theta", theta)?;
    if alpha_grid.is_empty() || alpha_grid.iter().any(|a| !(*a > 0.0 && *a < PI)) {
        return Err(invalid("alpha grid must be non-empty and inside (0, π)"));
    }
    let mut points = Vec::with_capacity(alpha_grid.len());
    for (i, &alpha) in alpha_grid.iter().enumerate() {
        let m = model.with_seed(derive_seed(model.seed, i as u64));
        let est = match pulses {
            PulseMode::Ideal => estimate(theta, beta, alpha, n, &m, settings)?,
            PulseMode::Finite { .. } => {
                let readout = pulses.rotation(alpha)?;
                let curve = move |b: f64| {
                    let psi = final_state(theta, b).expect("theta checked above");
                    readout
                        .apply(&psi)
                        .map(|s| s.population(0))
                        .unwrap_or(f64::NAN)
                };
                estimate_curve(&curve, beta, n, &m, settings)?
            }
        };
        points.push(AlphaPoint {
            alpha,
            estimate: est,
            theory: ramsey_sensitivity(theta, beta, alpha).unwrap_or(f64::INFINITY),
        });
    }
    let argmin_alpha = points
        .iter()
        .min_by(|a, b| a.estimate.delta_beta.total_cmp(&b.estimate.delta_beta))
        .map(|p| p.alpha)
        .unwrap_or(f64::NAN);
    Ok(AlphaSweep {
        points,
        argmin_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn ideal_scaling_fit() {
        let s = EstimateSettings {
            replicas: 1000,
            ..Default::default()
        };
        let r = noise_scaling(
            FRAC_PI_2,
            FRAC_PI_2,
            FRAC_PI_2,
            &[1, 2, 4, 9, 16, 25],
            &PhotonModel::ideal(4),
            &s,
        )
        .unwrap();
        assert!((r.delta0 - 0.5).abs() < 0.05, "{r:?}");
        assert!(r.xi0 < 0.02);
        assert!(
            (-0.55..=-0.45).contains(&r.loglog_slope),
            "{}",
            r.loglog_slope
        );
        assert!(
            noise_scaling(1.0, 1.0, 1.0, &[1, 2, 3, 4, 5], &PhotonModel::ideal(4), &s).is_err()
        );
    }

    #[test]
    fn fringe_follows_cosine() {
        let s = EstimateSettings {
            chi_runs: 200_000,
            ..Default::default()
        };
        let xi = crate::units::mhz(2.27);
        let times: Vec<f64> = (0..24).map(|k| 0.02 * k as f64).collect();
        let f = ramsey_fringe(
            FRAC_PI_3,
            FRAC_PI_2,
            xi,
            &times,
            9,
            &PhotonModel::default(),
            &s,
        )
        .unwrap();
        let want = -0.5 * FRAC_PI_3.sin();
        assert!(
            (f.amplitude - want).abs() < 0.05,
            "{} vs {want}",
            f.amplitude
        );
        let q = f.quadrature;
        assert!(
            (q.chi - f.quadrature_slope).abs() < 2.0 * q.chi_stderr.max(1e-3),
            "{q:?}"
        );
    }

    #[test]
    fn finite_readout_skews_the_alpha_curve() {
        let s = EstimateSettings {
            chi_runs: 2_000_000,
            ..Default::default()
        };
        let grid = [PI / 4.0, 3.0 * PI / 4.0];
        let pulses = PulseMode::Finite {
            rabi: crate::units::mhz(20.0),
            detuning: crate::units::mhz(10.0),
        };
        let r = alpha_sweep(
            FRAC_PI_2,
            FRAC_PI_2,
            &grid,
            1,
            &PhotonModel::ideal(3),
            &s,
            pulses,
        )
        .unwrap();
        let (a, b) = (
            r.points[0].estimate.delta_beta,
            r.points[1].estimate.delta_beta,
        );
        assert!((a - b).abs() > 0.02 * a.min(b), "{a} {b}");
    }
}
