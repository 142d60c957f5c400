//! Reference values for the Fisher information: finite differences of the state,
//! closed forms for the probe qubit, and the concurrence of two-qubit states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, QfiError, Result};
use crate::models::{two_qubit_hamiltonian, TwoQubitParams};
use crate::quantum::{eig_hermitian, EigenSystem, PureState};

/// Default step for finite-difference derivatives in β.
pub const DEFAULT_DBETA: f64 = 1e-4;
/// Minimum `|⟨ψ(β)|ψ(β ± dβ)⟩|` accepted as a continuous branch.
pub const CONTINUITY_THRESHOLD: f64 = 0.99;
/// Minimum overlap between consecutive ground states of a scan.
pub const SCAN_CONTINUITY_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QfiMethod {
    Analytic,
    FiniteDifference,
    ModulationProtocol,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiValue {
    pub value: f64,
    pub method: QfiMethod,
    pub stderr: f64,
}

impl QfiValue {
    pub fn exact(value: f64, method: QfiMethod) -> Self {
        Self {
            value,
            method,
            stderr: 0.0,
        }
    }
}

/// `F = 4[⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²]` for a normalized `ψ` and raw derivative vector.
pub fn pure_state_qfi(psi: &PureState, derivative: &[Complex64]) -> f64 {
    let a = psi.amplitudes();
    let norm: f64 = derivative.iter().map(|d| d.norm_sqr()).sum();
    let proj: Complex64 = a.iter().zip(derivative).map(|(x, d)| x.conj() * d).sum();
    (4.0 * (norm - proj.norm_sqr())).max(0.0)
}

fn check_step(dbeta: f64) -> Result<()> {
    if (1e-6..=1e-2).contains(&dbeta) {
        Ok(())
    } else {
        Err(invalid(format!(
            "dbeta must lie in [1e-6, 1e-2], got {dbeta}"
        )))
    }
}

/// Central difference with both neighbours rephased onto `ψ(β)`.
fn central_derivative<F>(
    state_of_beta: &F,
    centre: &PureState,
    beta: f64,
    dbeta: f64,
) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Result<PureState>,
{
    let mut neighbours = Vec::with_capacity(2);
    for b in [beta + dbeta, beta - dbeta] {
        let (aligned, overlap) = state_of_beta(b)?.aligned_to(centre)?;
        if overlap <= CONTINUITY_THRESHOLD {
            return Err(QfiError::BranchDiscontinuity { beta, overlap });
        }
        neighbours.push(aligned);
    }
    Ok(neighbours[0]
        .amplitudes()
        .iter()
        .zip(neighbours[1].amplitudes())
        .map(|(p, m)| (p - m) / (2.0 * dbeta))
        .collect())
}

/// Pure-state QFI from a single central difference of `state_of_beta` at `beta`.
pub fn qfi_finite_difference<F>(state_of_beta: F, beta: f64, dbeta: f64) -> Result<QfiValue>
where
    F: Fn(f64) -> Result<PureState>,
{
    check_step(dbeta)?;
    let centre = state_of_beta(beta)?;
    let d = central_derivative(&state_of_beta, &centre, beta, dbeta)?;
    Ok(QfiValue::exact(
        pure_state_qfi(&centre, &d),
        QfiMethod::FiniteDifference,
    ))
}

/// As [`qfi_finite_difference`], with the derivative Richardson-extrapolated from the
/// steps `dbeta` and `dbeta/2`, cancelling the O(dβ²) truncation term.
pub fn qfi_finite_difference_extrapolated<F>(
    state_of_beta: F,
    beta: f64,
    dbeta: f64,
) -> Result<QfiValue>
where
    F: Fn(f64) -> Result<PureState>,
{
    check_step(dbeta)?;
    let centre = state_of_beta(beta)?;
    let coarse = central_derivative(&state_of_beta, &centre, beta, dbeta)?;
    let fine = central_derivative(&state_of_beta, &centre, beta, dbeta / 2.0)?;
    let d: Vec<Complex64> = fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (f * 4.0 - c) / 3.0)
        .collect();
    Ok(QfiValue::exact(
        pure_state_qfi(&centre, &d),
        QfiMethod::FiniteDifference,
    ))
}

/// `F_β = sin²θ` for the Ramsey final state.
pub fn qfi_single_qubit_analytic(theta: f64) -> QfiValue {
    QfiValue::exact(theta.sin().powi(2), QfiMethod::Analytic)
}

/// Single-shot sensitivity in the α = π/2 basis:
/// `δβ = sqrt(1 − (cos β sin θ)²) / |sin β sin θ|`.
pub fn sensitivity_theory(theta: f64, beta: f64) -> Result<f64> {
    let slope_factor = beta.sin() * theta.sin();
    if slope_factor.abs() < 1e-12 {
        return Err(QfiError::DivergentSensitivity { slope_factor });
    }
    let contrast = beta.cos() * theta.sin();
    Ok((1.0 - contrast * contrast).max(0.0).sqrt() / slope_factor.abs())
}

/// Pure-state concurrence `|⟨ψ|σ_y⊗σ_y|ψ*⟩| = 2|a₀₀a₁₁ − a₀₁a₁₀|`.
pub fn concurrence(state: &PureState) -> Result<f64> {
    if state.dim() != 4 {
        return Err(invalid(format!(
            "concurrence needs a two-qubit state, got dimension {}",
            state.dim()
        )));
    }
    let a = state.amplitudes();
    Ok((2.0 * (a[0] * a[3] - a[1] * a[2]).norm()).min(1.0))
}

/// Ground state of the pair Hamiltonian at `p.beta`, rejecting degenerate points.
pub fn two_qubit_spectrum(p: &TwoQubitParams) -> Result<EigenSystem> {
    let es = eig_hermitian(&two_qubit_hamiltonian(p)?)?;
    let gap = es.eigenvalues[1] - es.eigenvalues[0];
    if gap < 1e-9 * p.gap.abs().max(1e-300) {
        return Err(QfiError::DegenerateGround { beta: p.beta, gap });
    }
    Ok(es)
}

/// Ground-state QFI of the pair at `p.beta`, by extrapolated finite differences.
pub fn two_qubit_ground_qfi(p: &TwoQubitParams, dbeta: f64) -> Result<QfiValue> {
    let params = *p;
    qfi_finite_difference_extrapolated(
        move |b| Ok(two_qubit_spectrum(&params.at_beta(b))?.ground().clone()),
        p.beta,
        dbeta,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSample {
    pub beta: f64,
    pub qfi: QfiValue,
    pub concurrence: f64,
    /// Ascending eigenvalues ε₁ … ε₄ (rad/µs).
    pub energies: Vec<f64>,
}

impl GroundStateSample {
    /// `ε₂ − ε₁`.
    pub fn gap(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }
}

/// Ground-state QFI and concurrence across a strictly increasing β grid.
///
/// Consecutive ground states are phase-matched; a point whose ground state overlaps
/// the previous one by less than 0.9 reports a branch discontinuity. Degenerate points
/// report their own error without aborting the scan.
pub fn ground_state_scan(
    p: &TwoQubitParams,
    beta_grid: &[f64],
) -> Result<Vec<Result<GroundStateSample>>> {
    p.validate()?;
    if beta_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("beta grid must be strictly increasing"));
    }
    let compute = |&beta: &f64| -> Result<(GroundStateSample, PureState)> {
        let at = p.at_beta(beta);
        let es = two_qubit_spectrum(&at)?;
        let qfi = two_qubit_ground_qfi(&at, DEFAULT_DBETA)?;
        let ground = es.ground().clone();
        Ok((
            GroundStateSample {
                beta,
                qfi,
                concurrence: concurrence(&ground)?,
                energies: es.eigenvalues,
            },
            ground,
        ))
    };
    let raw: Vec<Result<(GroundStateSample, PureState)>> = par_map(beta_grid, compute);

    let mut previous: Option<PureState> = None;
    let mut out = Vec::with_capacity(raw.len());
    for item in raw {
        match item {
            Ok((sample, ground)) => {
                let aligned = match &previous {
                    Some(prev) => {
                        let (aligned, overlap) = ground.aligned_to(prev)?;
                        if overlap <= SCAN_CONTINUITY_THRESHOLD {
                            out.push(Err(QfiError::BranchDiscontinuity {
                                beta: sample.beta,
                                overlap,
                            }));
                            previous = Some(aligned);
                            continue;
                        }
                        aligned
                    }
                    None => ground,
                };
                previous = Some(aligned);
                out.push(Ok(sample));
            }
            Err(e) => {
                previous = None;
                out.push(Err(e));
            }
        }
    }
    Ok(out)
}

/// Maps over a slice, in parallel when the `parallel` feature is on. Output order
/// follows the input.
#[cfg(feature = "parallel")]
pub fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}
