//! Hamiltonians and states of the NV-centre probe qubit and of the NV–¹³C pair.
//!
//! Basis order for the electron spin is (|0⟩, |−1⟩). For the pair, the electron is
//! the first tensor factor: index `2·e + n`.
//!
//! The probe Hamiltonian is written in the gauge where the Ramsey final state
//! `cos(θ/2)e^{iβ/2}|0⟩ − sin(θ/2)e^{−iβ/2}|−1⟩` is its upper (+A/2) eigenstate:
//!
//! ```text
//! H(β) = (A/2) [[ cos θ,          −sin θ e^{iβ} ],
//!               [ −sin θ e^{−iβ},  −cos θ       ]]
//! ```
//!
//! This is the familiar matrix `(A/2)[[cos θ, sin θ e^{−iβ'}], [sin θ e^{iβ'}, −cos θ]]`
//! at `β' = π − β`; the two differ by a relabelling of the phase origin and give the
//! same Fisher information with respect to β.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quantum::{
    pauli, CMatrix, HermitianOperator, Propagator, PureState, TimeDependentHamiltonian,
};
use crate::units::mhz;

/// Probe-qubit parameters. Frequencies in rad/µs, angles in rad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitParams {
    /// Probe gap `A`.
    pub gap: f64,
    pub theta: f64,
    pub beta: f64,
    /// Free-evolution detuning `ξ = ω₁ − ω₀`.
    pub detuning: f64,
    /// Preparation Rabi frequency `Ω`.
    pub rabi: f64,
    /// Drive carrier `ω₁`.
    pub carrier: f64,
}

impl Default for SingleQubitParams {
    /// Probe settings of the QFI measurement: A = 2π·15.98, θ = π/3, ξ = 2π·5.025.
    /// β = π/2, Ω = 2π·20 and ω₁ = 2π·500 are simulation defaults.
    fn default() -> Self {
        Self {
            gap: mhz(15.98),
            theta: PI / 3.0,
            beta: PI / 2.0,
            detuning: mhz(5.025),
            rabi: mhz(20.0),
            carrier: mhz(500.0),
        }
    }
}

impl SingleQubitParams {
    pub fn with_angles(self, theta: f64, beta: f64) -> Self {
        Self {
            theta,
            beta,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap.is_finite() && self.gap > 0.0) {
            return Err(invalid(format!("gap A must be positive, got {}", self.gap)));
        }
        check_theta(self.theta)?;
        if !(0.0..TAU).contains(&self.beta) {
            return Err(invalid(format!(
                "beta must lie in [0, 2π), got {}",
                self.beta
            )));
        }
        for (name, v) in [
            ("detuning", self.detuning),
            ("rabi", self.rabi),
            ("carrier", self.carrier),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=PI).contains(&theta) {
        Ok(())
    } else {
        Err(invalid(format!("theta must lie in [0, π], got {theta}")))
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `cos(θ/2)|0⟩ − sin(θ/2)|−1⟩`.
pub fn resource_state(theta: f64) -> Result<PureState> {
    final_state(theta, 0.0)
}

/// `cos(θ/2)e^{iβ/2}|0⟩ − sin(θ/2)e^{−iβ/2}|−1⟩`.
pub fn final_state(theta: f64, beta: f64) -> Result<PureState> {
    check_theta(theta)?;
    Ok(final_state_unchecked(theta, beta))
}

pub(crate) fn final_state_unchecked(theta: f64, beta: f64) -> PureState {
    let (s, co) = (theta / 2.0).sin_cos();
    PureState::from_unit(vec![
        Complex64::from_polar(co, beta / 2.0),
        -Complex64::from_polar(s, -beta / 2.0),
    ])
}

/// The state orthogonal to [`final_state`]: the lower eigenstate of the probe.
pub fn orthogonal_final_state(theta: f64, beta: f64) -> Result<PureState> {
    check_theta(theta)?;
    let (s, co) = (theta / 2.0).sin_cos();
    Ok(PureState::from_unit(vec![
        Complex64::from_polar(s, beta / 2.0),
        Complex64::from_polar(co, -beta / 2.0),
    ]))
}

/// Free precession in the frame of the drive carrier: `−(ξ/2)σ_z`. Evolving the
/// resource state for `T = β/ξ` yields [`final_state`]`(θ, β)`.
pub fn free_evolution_hamiltonian(detuning: f64) -> HermitianOperator {
    HermitianOperator::new_unchecked(pauli::z() * c(-detuning / 2.0))
}

/// Ideal rotation `Y_angle = exp(i·angle·σ_y/2)`, mapping |0⟩ to
/// `cos(angle/2)|0⟩ − sin(angle/2)|−1⟩`.
pub fn y_rotation(angle: f64) -> Propagator {
    let (s, co) = (angle / 2.0).sin_cos();
    Propagator::from_matrix(CMatrix::from_row_slice(2, 2, &[c(co), c(s), c(-s), c(co)]))
}

/// Rotating-frame Hamiltonian of a finite-amplitude Y pulse, `−(Ω/2)σ_y − (δ/2)σ_z`.
/// With `δ = 0`, evolving for `angle/Ω` reproduces [`y_rotation`]`(angle)`.
pub fn y_pulse_hamiltonian(rabi: f64, detuning: f64) -> HermitianOperator {
    HermitianOperator::new_unchecked(pauli::y() * c(-rabi / 2.0) + pauli::z() * c(-detuning / 2.0))
}

fn probe_matrix(gap: f64, theta: f64, beta: f64) -> CMatrix {
    let h = gap / 2.0;
    let (st, ct) = theta.sin_cos();
    let off = -Complex64::from_polar(h * st, beta);
    CMatrix::from_row_slice(2, 2, &[c(h * ct), off, off.conj(), c(-h * ct)])
}

/// Probe Hamiltonian `H(β)`; [`final_state`] is its +A/2 eigenstate.
pub fn probe_hamiltonian(p: &SingleQubitParams) -> Result<HermitianOperator> {
    p.validate()?;
    Ok(HermitianOperator::new_unchecked(probe_matrix(
        p.gap, p.theta, p.beta,
    )))
}

/// `∂H/∂β` of the probe Hamiltonian.
pub fn probe_hamiltonian_derivative(p: &SingleQubitParams) -> Result<HermitianOperator> {
    p.validate()?;
    let off =
        Complex64::new(0.0, -1.0) * Complex64::from_polar(p.gap / 2.0 * p.theta.sin(), p.beta);
    Ok(HermitianOperator::new_unchecked(CMatrix::from_row_slice(
        2,
        2,
        &[c(0.0), off, off.conj(), c(0.0)],
    )))
}

pub(crate) fn check_modulation_amplitude(a: f64) -> Result<()> {
    if a > 0.0 && a <= 0.2 {
        Ok(())
    } else {
        Err(invalid(format!(
            "modulation amplitude must lie in (0, 0.2], got {a}"
        )))
    }
}

/// `H(β + a·cos(ωt))`, bandwidth `max(A, ω)`.
pub fn modulated_hamiltonian(
    p: &SingleQubitParams,
    a: f64,
    omega: f64,
) -> Result<TimeDependentHamiltonian> {
    p.validate()?;
    check_modulation_amplitude(a)?;
    modulated_unchecked(p, a, omega)
}

/// Also accepts `a = 0` (no drive); used for sequence-identity checks.
pub(crate) fn modulated_unchecked(
    p: &SingleQubitParams,
    a: f64,
    omega: f64,
) -> Result<TimeDependentHamiltonian> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(invalid(format!(
            "modulation frequency must be positive, got {omega}"
        )));
    }
    let (gap, theta, beta) = (p.gap, p.theta, p.beta);
    TimeDependentHamiltonian::new(2, gap.max(omega), move |t| {
        HermitianOperator::new_unchecked(probe_matrix(gap, theta, beta + a * (omega * t).cos()))
    })
}

/// Minimum ratio `ω₁/A` for which the rotating-wave picture is trusted.
pub const RWA_MIN_RATIO: f64 = 20.0;

/// Laboratory-frame drive `(ω₁/2)σ_z + f₀(t)σ_x` whose rotating-wave limit, in the
/// frame turning at `ω₁ − A cos θ`, is the modulated probe Hamiltonian. The waveform
/// is `f₀(t) = −A sin θ · cos[(ω₁ − A cos θ)t − β(t)]` with `β(t) = β + a cos(ωt)`;
/// the sign of the phase and the overall π shift match the gauge of
/// [`probe_hamiltonian`].
pub fn lab_frame_drive(
    p: &SingleQubitParams,
    a: f64,
    omega: f64,
) -> Result<TimeDependentHamiltonian> {
    p.validate()?;
    if !(0.0..=0.2).contains(&a) {
        return Err(invalid(format!(
            "modulation amplitude must lie in [0, 0.2], got {a}"
        )));
    }
    if p.carrier < RWA_MIN_RATIO * p.gap {
        return Err(invalid(format!(
            "carrier {} rad/us is below {}·A = {} rad/us; rotating-wave model not valid",
            p.carrier,
            RWA_MIN_RATIO,
            RWA_MIN_RATIO * p.gap
        )));
    }
    let frame = rotating_frame_frequency(p);
    let (carrier, envelope, beta) = (p.carrier, p.gap * p.theta.sin(), p.beta);
    let z = pauli::z() * c(carrier / 2.0);
    let x = pauli::x();
    TimeDependentHamiltonian::new(2, carrier + p.gap + omega.abs(), move |t| {
        let phase = frame * t - (beta + a * (omega * t).cos());
        HermitianOperator::new_unchecked(&z + &x * c(-envelope * phase.cos()))
    })
}

/// Drive amplitude of [`lab_frame_drive`] at time `t`.
pub fn lab_frame_waveform(p: &SingleQubitParams, a: f64, omega: f64, t: f64) -> f64 {
    let phase = rotating_frame_frequency(p) * t - (p.beta + a * (omega * t).cos());
    -p.gap * p.theta.sin() * phase.cos()
}

/// Frequency `ω₁ − A cos θ` of the frame in which the lab drive becomes the probe.
pub fn rotating_frame_frequency(p: &SingleQubitParams) -> f64 {
    p.carrier - p.gap * p.theta.cos()
}

/// Maps a lab-frame state at time `t` into the probe's rotating frame.
pub fn lab_to_rotating(p: &SingleQubitParams, state: &PureState, t: f64) -> PureState {
    let w = rotating_frame_frequency(p) * t / 2.0;
    let a = state.amplitudes();
    PureState::from_unit(vec![
        a[0] * Complex64::from_polar(1.0, w),
        a[1] * Complex64::from_polar(1.0, -w),
    ])
}

/// ¹³C gyromagnetic ratio, MHz per gauss.
pub const GAMMA_C13_MHZ_PER_GAUSS: f64 = 1.0705e-3;

/// Parameters of the NV–¹³C effective Hamiltonian. Frequencies in rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitParams {
    pub gap: f64,
    pub beta: f64,
    pub phi: f64,
    pub a_par: f64,
    pub a_perp: f64,
    pub omega_c: f64,
}

impl TwoQubitParams {
    /// Hyperfine couplings A_⊥ = 2π·2.79, A_∥ = 2π·11.832 and ω_C = γ_C·504 G, with the
    /// given probe gap and β = 0, φ = 0.
    pub fn hyperfine_pair(gap: f64) -> Self {
        Self {
            gap,
            beta: 0.0,
            phi: 0.0,
            a_par: mhz(11.832),
            a_perp: mhz(2.79),
            omega_c: nuclear_larmor(504.0),
        }
    }

    /// No hyperfine coupling; the nuclear spin only precesses at ω_C.
    pub fn decoupled(gap: f64, omega_c: f64) -> Self {
        Self {
            gap,
            beta: 0.0,
            phi: 0.0,
            a_par: 0.0,
            a_perp: 0.0,
            omega_c,
        }
    }

    pub fn at_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gap", self.gap),
            ("beta", self.beta),
            ("phi", self.phi),
            ("a_par", self.a_par),
            ("a_perp", self.a_perp),
            ("omega_c", self.omega_c),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        if self.a_perp < 0.0 {
            return Err(invalid(format!(
                "a_perp must be non-negative, got {}",
                self.a_perp
            )));
        }
        Ok(())
    }
}

impl Default for TwoQubitParams {
    /// Hyperfine pair with the probe gap of the single-qubit experiment, A = 2π·15.98.
    fn default() -> Self {
        Self::hyperfine_pair(mhz(15.98))
    }
}

/// ¹³C Larmor frequency `γ_C·B_z` in rad/µs for a field in gauss.
pub fn nuclear_larmor(field_gauss: f64) -> f64 {
    mhz(GAMMA_C13_MHZ_PER_GAUSS * field_gauss)
}

fn two_qubit_matrix(p: &TwoQubitParams, beta: f64) -> CMatrix {
    let (sb, cb) = beta.sin_cos();
    let (sp, cp) = p.phi.sin_cos();
    let electron =
        (pauli::z() * c(cb) + (pauli::x() * c(cp) + pauli::y() * c(sp)) * c(sb)) * c(p.gap / 2.0);
    let id = pauli::identity();
    electron.kronecker(&id)
        - pauli::z().kronecker(&pauli::z()) * c(p.a_par / 4.0)
        - pauli::z().kronecker(&pauli::x()) * c(p.a_perp / 4.0)
        + id.kronecker(&pauli::z()) * c(p.omega_c / 2.0 - p.a_par / 4.0)
        - id.kronecker(&pauli::x()) * c(p.a_perp / 4.0)
}

/// Effective NV–¹³C Hamiltonian:
/// `(A/2)[cos β σ_z + sin β (cos φ σ_x + sin φ σ_y)] − (A∥/4)σ_zτ_z − (A⊥/4)σ_zτ_x
///  + (ω_C/2 − A∥/4)τ_z − (A⊥/4)τ_x`.
pub fn two_qubit_hamiltonian(p: &TwoQubitParams) -> Result<HermitianOperator> {
    p.validate()?;
    Ok(HermitianOperator::new_unchecked(two_qubit_matrix(
        p, p.beta,
    )))
}

/// `∂H/∂β` of [`two_qubit_hamiltonian`]; acts on the electron only.
pub fn two_qubit_hamiltonian_derivative(p: &TwoQubitParams) -> Result<HermitianOperator> {
    p.validate()?;
    let (sb, cb) = p.beta.sin_cos();
    let (sp, cp) = p.phi.sin_cos();
    let electron =
        (pauli::z() * c(-sb) + (pauli::x() * c(cp) + pauli::y() * c(sp)) * c(cb)) * c(p.gap / 2.0);
    Ok(HermitianOperator::new_unchecked(
        electron.kronecker(&pauli::identity()),
    ))
}

/// `H(β + a·cos(ωt))` for the pair; bandwidth is the larger of ω and the spectral
/// radius bound `A/2 + A∥/2 + A⊥/2 + |ω_C|/2`.
pub fn modulated_two_qubit_hamiltonian(
    p: &TwoQubitParams,
    a: f64,
    omega: f64,
) -> Result<TimeDependentHamiltonian> {
    p.validate()?;
    check_modulation_amplitude(a)?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(invalid(format!(
            "modulation frequency must be positive, got {omega}"
        )));
    }
    let params = *p;
    let bound = 0.5 * (p.gap.abs() + p.a_par.abs() + p.a_perp + p.omega_c.abs()) + 0.5 * p.a_perp;
    TimeDependentHamiltonian::new(4, bound.max(omega), move |t| {
        HermitianOperator::new_unchecked(two_qubit_matrix(
            &params,
            params.beta + a * (omega * t).cos(),
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{eig_hermitian, propagate};

    fn residual(h: &HermitianOperator, shift: f64, s: &PureState) -> f64 {
        let hv = h.apply(s).unwrap();
        hv.iter()
            .zip(s.amplitudes())
            .map(|(a, b)| (a - b * shift).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn resource_state_examples() {
        let s = resource_state(0.0).unwrap();
        assert!((s.population(0) - 1.0).abs() < 1e-15);
        let s = resource_state(PI / 3.0).unwrap();
        let a = s.amplitudes();
        assert!((a[0].re - 3f64.sqrt() / 2.0).abs() < 1e-15 && a[0].im == 0.0);
        assert!((a[1].re + 0.5).abs() < 1e-15);
        let s = resource_state(PI / 2.0).unwrap();
        let r = 0.5f64.sqrt();
        assert!((s.amplitudes()[0].re - r).abs() < 1e-15);
        assert!((s.amplitudes()[1].re + r).abs() < 1e-15);
        assert!(resource_state(-0.1).is_err());
        assert!(resource_state(3.2).is_err());
    }

    #[test]
    fn final_state_phase_flip() {
        // θ = π/2, β = π gives i(|0⟩ + |−1⟩)/√2
        let s = final_state(PI / 2.0, PI).unwrap();
        let r = 0.5f64.sqrt();
        let target = PureState::new(vec![Complex64::new(0.0, r), Complex64::new(0.0, r)]).unwrap();
        assert!((s.fidelity(&target).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(final_state(0.7, 0.0).unwrap(), resource_state(0.7).unwrap());
    }

    #[test]
    fn free_evolution_reproduces_final_state() {
        let xi = mhz(5.025);
        let h = TimeDependentHamiltonian::constant(free_evolution_hamiltonian(xi));
        for &(theta, beta) in &[(PI / 3.0, 1.1), (PI / 2.0, PI / 2.0), (2.5, 5.9)] {
            let start = resource_state(theta).unwrap();
            let out = propagate(&start, &h, 0.0, beta / xi, h.default_time_step()).unwrap();
            let expected = final_state(theta, beta).unwrap();
            let dist: f64 = out
                .amplitudes()
                .iter()
                .zip(expected.amplitudes())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(dist < 1e-9, "distance {dist}");
        }
    }

    #[test]
    fn finite_pulse_matches_ideal_rotation() {
        let rabi = mhz(20.0);
        let h = TimeDependentHamiltonian::constant(y_pulse_hamiltonian(rabi, 0.0));
        let zero = PureState::basis(2, 0).unwrap();
        let out = propagate(&zero, &h, 0.0, 1.2 / rabi, h.default_time_step()).unwrap();
        let ideal = y_rotation(1.2).apply(&zero).unwrap();
        assert!((out.fidelity(&ideal).unwrap() - 1.0).abs() < 1e-12);
        assert!((ideal.fidelity(&resource_state(1.2).unwrap()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn probe_limits() {
        let a = mhz(15.98);
        let base = SingleQubitParams::default();
        let h = probe_hamiltonian(&SingleQubitParams {
            gap: a,
            ..base.with_angles(0.0, 0.0)
        })
        .unwrap();
        assert!((h.matrix() - pauli::z() * c(a / 2.0)).norm() < 1e-12);
        // θ = π/2, β = π: (A/2)σ_x in this gauge
        let h = probe_hamiltonian(&base.with_angles(PI / 2.0, PI)).unwrap();
        assert!((h.matrix() - pauli::x() * c(a / 2.0)).norm() < 1e-12);
        // θ = π/2, β = 0: −(A/2)σ_x
        let h = probe_hamiltonian(&base.with_angles(PI / 2.0, 0.0)).unwrap();
        assert!((h.matrix() + pauli::x() * c(a / 2.0)).norm() < 1e-12);
    }

    #[test]
    fn probe_spectrum_is_plus_minus_half_gap() {
        let p = SingleQubitParams::default();
        for beta in [0.0, 1.0, 4.0] {
            let es =
                eig_hermitian(&probe_hamiltonian(&p.with_angles(PI / 3.0, beta)).unwrap()).unwrap();
            assert!((es.eigenvalues[0] + p.gap / 2.0).abs() < 1e-12);
            assert!((es.eigenvalues[1] - p.gap / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn final_state_is_upper_eigenstate_on_grid() {
        let base = SingleQubitParams::default();
        for i in 0..13 {
            for j in 0..13 {
                let theta = PI * i as f64 / 12.0;
                let beta = TAU * j as f64 / 13.0;
                let p = base.with_angles(theta, beta);
                let h = probe_hamiltonian(&p).unwrap();
                let up = final_state(theta, beta).unwrap();
                let down = orthogonal_final_state(theta, beta).unwrap();
                assert!(residual(&h, p.gap / 2.0, &up) < 1e-9);
                assert!(residual(&h, -p.gap / 2.0, &down) < 1e-9);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = SingleQubitParams::default().with_angles(1.0, 2.0);
        let d = probe_hamiltonian_derivative(&p).unwrap();
        let h = 1e-6;
        let plus = probe_hamiltonian(&p.with_angles(1.0, 2.0 + h)).unwrap();
        let minus = probe_hamiltonian(&p.with_angles(1.0, 2.0 - h)).unwrap();
        let fd = (plus.matrix() - minus.matrix()) / c(2.0 * h);
        assert!((fd - d.matrix()).norm() < 1e-6);

        let q = TwoQubitParams::default().at_beta(0.4);
        let d = two_qubit_hamiltonian_derivative(&q).unwrap();
        let plus = two_qubit_hamiltonian(&q.at_beta(0.4 + h)).unwrap();
        let minus = two_qubit_hamiltonian(&q.at_beta(0.4 - h)).unwrap();
        let fd = (plus.matrix() - minus.matrix()) / c(2.0 * h);
        assert!((fd - d.matrix()).norm() < 1e-6);
    }

    #[test]
    fn modulated_generator() {
        let p = SingleQubitParams::default();
        let h = modulated_hamiltonian(&p, 0.1, p.gap).unwrap();
        let shifted = probe_hamiltonian(&p.with_angles(p.theta, p.beta + 0.1)).unwrap();
        assert!(h.at(0.0).distance(&shifted) < 1e-12);
        assert_eq!(h.bandwidth(), p.gap);
        assert!(modulated_hamiltonian(&p, 0.0, p.gap).is_err());
        assert!(modulated_hamiltonian(&p, 0.25, p.gap).is_err());
        // tiny amplitude: generator is essentially the static probe
        let h = modulated_hamiltonian(&p, 1e-12, p.gap).unwrap();
        let h0 = probe_hamiltonian(&p).unwrap();
        assert!(h.at(0.123).distance(&h0) < 1e-9);
    }

    #[test]
    fn lab_frame_envelope() {
        let p = SingleQubitParams::default().with_angles(PI / 2.0, 0.0);
        // a = 0, θ = π/2: envelope A
        let peak = (0..2000)
            .map(|k| lab_frame_waveform(&p, 0.0, p.gap, k as f64 * 1e-4).abs())
            .fold(0.0, f64::max);
        assert!((peak - p.gap).abs() / p.gap < 1e-3);
        let p0 = SingleQubitParams::default().with_angles(0.0, 0.0);
        assert_eq!(lab_frame_waveform(&p0, 0.0, p0.gap, 0.37), 0.0);
        assert!((rotating_frame_frequency(&p0) - (p0.carrier - p0.gap)).abs() < 1e-12);
        let slow = SingleQubitParams {
            carrier: 10.0 * p.gap,
            ..p
        };
        assert!(lab_frame_drive(&slow, 0.1, p.gap).is_err());
    }

    #[test]
    fn decoupled_pair_spectrum() {
        let p = TwoQubitParams::decoupled(mhz(10.0), 0.0).at_beta(0.7);
        let es = eig_hermitian(&two_qubit_hamiltonian(&p).unwrap()).unwrap();
        let half = p.gap / 2.0;
        let expected = [-half, -half, half, half];
        for (e, x) in es.eigenvalues.iter().zip(expected) {
            assert!((e - x).abs() < 1e-10);
        }
    }

    #[test]
    fn larmor_default() {
        let p = TwoQubitParams::default();
        assert!((p.omega_c - mhz(0.5395)).abs() < mhz(1e-4));
    }
}
