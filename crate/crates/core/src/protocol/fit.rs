//! Least-squares fit of `offset + amplitude·cos(νt)` to a Rabi trace.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, QfiError, Result};
use crate::protocol::RabiTrace;

/// Acceptance thresholds for a fit.
pub const MAX_RMS_RESIDUAL: f64 = 0.05;
pub const MAX_GUESS_DEVIATION: f64 = 0.2;
pub const MIN_SAMPLES: usize = 12;
pub const MIN_PERIODS: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Fitted angular frequency ν (rad/µs).
    pub nu: f64,
    /// One-sigma uncertainty of ν from the fit covariance.
    pub nu_stderr: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub rms_residual: f64,
    pub converged: bool,
    /// Frequency of the spectral peak used to start the fit.
    pub initial_guess: f64,
}

impl FitResult {
    /// Periods of the fitted oscillation covered by a window of length `span`.
    pub fn periods_in(&self, span: f64) -> f64 {
        self.nu * span / TAU
    }

    pub fn model(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (self.nu * t).cos()
    }
}

/// Peak of the zero-phase cosine spectrum of `y − ȳ`: for each trial ν the variance
/// captured by `cos(νt)` after removing its mean over the samples.
pub fn spectral_peak(times: &[f64], values: &[f64]) -> Option<f64> {
    let n = times.len();
    if n < 3 {
        return None;
    }
    let span = times[n - 1] - times[0];
    let min_dt = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !(span > 0.0 && min_dt.is_finite()) {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let lo = TAU / (8.0 * span);
    let hi = std::f64::consts::PI / min_dt;
    let grid = 4000;
    let mut best = (f64::NEG_INFINITY, lo);
    for k in 0..=grid {
        let nu = lo + (hi - lo) * k as f64 / grid as f64;
        let cos: Vec<f64> = times.iter().map(|t| (nu * t).cos()).collect();
        let cmean = cos.iter().sum::<f64>() / n as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for (c, v) in cos.iter().zip(values) {
            num += (c - cmean) * (v - mean);
            den += (c - cmean) * (c - cmean);
        }
        if den <= 1e-12 * n as f64 {
            continue;
        }
        let power = num * num / den;
        if power > best.0 {
            best = (power, nu);
        }
    }
    best.0.is_finite().then_some(best.1)
}

fn residuals(times: &[f64], values: &[f64], p: &Vector3<f64>) -> Vec<f64> {
    times
        .iter()
        .zip(values)
        .map(|(t, y)| y - (p[0] + p[1] * (p[2] * t).cos()))
        .collect()
}

fn rss(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn normal_equations(times: &[f64], r: &[f64], p: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    for (t, ri) in times.iter().zip(r) {
        let (s, c) = (p[2] * t).sin_cos();
        let j = Vector3::new(1.0, c, -p[1] * t * s);
        jtj += j * j.transpose();
        jtr += j * *ri;
    }
    (jtj, jtr)
}

/// Levenberg–Marquardt from `start = (offset, amplitude, ν)`.
fn levenberg_marquardt(times: &[f64], values: &[f64], start: Vector3<f64>) -> (Vector3<f64>, f64) {
    let mut p = start;
    let mut r = residuals(times, values, &p);
    let mut cost = rss(&r);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let (jtj, jtr) = normal_equations(times, &r, &p);
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj;
            for i in 0..3 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let tr = residuals(times, values, &trial);
            let tc = rss(&tr);
            if tc < cost {
                let rel = (cost - tc) / cost.max(1e-300);
                p = trial;
                r = tr;
                cost = tc;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < 1e-15 {
                    return (p, cost);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (p, cost)
}

/// Nonlinear least squares of `offset + amplitude·cos(νt)`, started at the spectral
/// peak of the mean-subtracted trace.
pub fn fit_rabi(trace: &RabiTrace) -> Result<FitResult> {
    let (t, y) = (&trace.times, &trace.survival);
    if t.len() != y.len() {
        return Err(invalid("trace times and values differ in length"));
    }
    if t.len() < MIN_SAMPLES {
        return Err(invalid(format!(
            "fit needs at least {MIN_SAMPLES} samples, got {}",
            t.len()
        )));
    }
    let guess = spectral_peak(t, y).ok_or_else(|| invalid("trace has no usable time span"))?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    // linear solve for offset and amplitude at the guessed frequency
    let (offset0, amp0) = {
        let cos: Vec<f64> = t.iter().map(|ti| (guess * ti).cos()).collect();
        crate::stats::linear_fit(&cos, y).unwrap_or((mean, 0.5))
    };
    let (p, cost) = levenberg_marquardt(t, y, Vector3::new(offset0, amp0, guess));
    let n = t.len() as f64;
    let rms = (cost / n).sqrt();
    let mut nu = p[2];
    if nu < 0.0 {
        nu = -nu;
    }
    let r = residuals(t, y, &p);
    let (jtj, _) = normal_equations(t, &r, &p);
    let sigma2 = cost / (n - 3.0).max(1.0);
    let nu_stderr = jtj
        .try_inverse()
        .map(|cov| (cov[(2, 2)] * sigma2).max(0.0).sqrt())
        .unwrap_or(f64::INFINITY);

    let span = t[t.len() - 1] - t[0];
    let converged = rms < MAX_RMS_RESIDUAL
        && (nu - guess).abs() <= MAX_GUESS_DEVIATION * guess
        && nu.is_finite();
    if !converged {
        return Err(QfiError::FitFailed {
            initial_guess: guess,
            residual: rms,
        });
    }
    if nu * span / TAU < MIN_PERIODS {
        return Err(invalid(format!(
            "trace covers {:.2} oscillation periods; at least {MIN_PERIODS} are required",
            nu * span / TAU
        )));
    }
    Ok(FitResult {
        nu,
        nu_stderr,
        amplitude: p[1],
        offset: p[0],
        rms_residual: rms,
        converged,
        initial_guess: guess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(nu: f64, span: f64, n: usize, noise: impl Fn(usize) -> f64) -> RabiTrace {
        let times: Vec<f64> = (0..n).map(|k| span * k as f64 / (n - 1) as f64).collect();
        let survival = times
            .iter()
            .enumerate()
            .map(|(k, t)| 0.5 * (1.0 + (nu * t).cos()) + noise(k))
            .collect();
        RabiTrace {
            times,
            survival,
            target_label: "synthetic".into(),
        }
    }

    #[test]
    fn exact_cosine_is_recovered() {
        let nu = TAU;
        let fit = fit_rabi(&trace(nu, 2.0, 60, |_| 0.0)).unwrap();
        assert!((fit.nu - nu).abs() / nu < 1e-6, "{fit:?}");
        assert!((fit.amplitude - 0.5).abs() < 1e-6);
        assert!(fit.rms_residual < 1e-8);
    }

    #[test]
    fn short_or_flat_traces_are_rejected() {
        assert!(fit_rabi(&trace(TAU, 2.0, 8, |_| 0.0)).is_err());
        // only half a period
        assert!(fit_rabi(&trace(TAU, 0.5, 40, |_| 0.0)).is_err());
    }

    #[test]
    fn garbage_does_not_converge() {
        // large deterministic scatter swamps the oscillation
        let t = trace(TAU, 2.0, 40, |k| {
            ((k * 7919 % 101) as f64 / 101.0 - 0.5) * 2.0
        });
        assert!(matches!(fit_rabi(&t), Err(QfiError::FitFailed { .. })));
    }
}
