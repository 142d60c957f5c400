use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, QfiError, Result};
use crate::quantum::operator::apply_raw;
use crate::quantum::{eig_hermitian, CMatrix, HermitianOperator, Propagator, PureState};

/// Largest admissible step as a fraction of the shortest period `2π/ω_max`.
pub const MAX_STEP_FRACTION: f64 = 0.05;
/// Default number of steps per shortest period.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 200.0;

type Generator = dyn Fn(f64) -> HermitianOperator + Send + Sync;

/// Hamiltonian `H(t)` (t in µs) with a declared sampling bandwidth `ω_max` (rad/µs).
#[derive(Clone)]
pub struct TimeDependentHamiltonian {
    generator: Arc<Generator>,
    bandwidth: f64,
    dim: usize,
}

impl fmt::Debug for TimeDependentHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeDependentHamiltonian")
            .field("dim", &self.dim)
            .field("bandwidth", &self.bandwidth)
            .finish_non_exhaustive()
    }
}

impl TimeDependentHamiltonian {
    /// The generator must return operators of dimension `dim` for every `t`.
    pub fn new<F>(dim: usize, bandwidth: f64, generator: F) -> Result<Self>
    where
        F: Fn(f64) -> HermitianOperator + Send + Sync + 'static,
    {
        crate::quantum::state::check_dim(dim)?;
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(invalid(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        let probe = generator(0.0);
        if probe.dim() != dim {
            return Err(QfiError::DimensionMismatch {
                left: dim,
                right: probe.dim(),
            });
        }
        Ok(Self {
            generator: Arc::new(generator),
            bandwidth,
            dim,
        })
    }

    /// Time-independent Hamiltonian; bandwidth is its spectral radius (at least 1 rad/µs).
    pub fn constant(h: HermitianOperator) -> Self {
        let es = eig_hermitian(&h).expect("validated operator");
        let radius = es.eigenvalues.iter().map(|e| e.abs()).fold(1.0, f64::max);
        let dim = h.dim();
        Self {
            generator: Arc::new(move |_| h.clone()),
            bandwidth: radius,
            dim,
        }
    }

    pub fn at(&self, t: f64) -> HermitianOperator {
        (self.generator)(t)
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `2π / (200 ω_max)`.
    pub fn default_time_step(&self) -> f64 {
        TAU / (DEFAULT_STEPS_PER_PERIOD * self.bandwidth)
    }

    /// `0.05 · 2π / ω_max`.
    pub fn max_time_step(&self) -> f64 {
        MAX_STEP_FRACTION * TAU / self.bandwidth
    }

    fn check_step(&self, dt: f64) -> Result<()> {
        let limit = self.max_time_step();
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        // Tolerate rounding from callers that pass the limit itself.
        if dt > limit * (1.0 + 1e-12) {
            return Err(QfiError::TimeStepTooCoarse {
                dt,
                limit,
                bandwidth: self.bandwidth,
            });
        }
        Ok(())
    }
}

/// Exact propagator `exp(−i H dt)` of a constant Hermitian operator.
pub fn exp_step(h: &HermitianOperator, dt: f64) -> Propagator {
    match h.dim() {
        2 => Propagator::from_matrix(exp_step_qubit(h.matrix(), dt)),
        _ => {
            let es = eig_hermitian(h).expect("validated operator");
            let n = h.dim();
            let mut m = CMatrix::zeros(n, n);
            for (e, v) in es.eigenvalues.iter().zip(&es.eigenvectors) {
                let phase = Complex64::from_polar(1.0, -e * dt);
                let a = v.amplitudes();
                for r in 0..n {
                    let ar = a[r] * phase;
                    for c in 0..n {
                        m[(r, c)] += ar * a[c].conj();
                    }
                }
            }
            Propagator::from_matrix(m)
        }
    }
}

/// Closed form through the Pauli decomposition `H = h₀ + h·σ`.
fn exp_step_qubit(m: &CMatrix, dt: f64) -> CMatrix {
    let h0 = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
    let hz = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
    let hx = m[(1, 0)].re;
    let hy = m[(1, 0)].im;
    let r = (hx * hx + hy * hy + hz * hz).sqrt();
    let angle = r * dt;
    let cos = angle.cos();
    // sin(r dt) / r, stable as r → 0
    let sinc = if angle.abs() < 1e-8 {
        dt * (1.0 - angle * angle / 6.0)
    } else {
        angle.sin() / r
    };
    let global = Complex64::from_polar(1.0, -h0 * dt);
    let i = Complex64::new(0.0, 1.0);
    // cos·1 − i·sinc·(hx σx + hy σy + hz σz)
    let u00 = Complex64::new(cos, 0.0) - i * sinc * hz;
    let u11 = Complex64::new(cos, 0.0) + i * sinc * hz;
    let u01 = -i * sinc * Complex64::new(hx, -hy);
    let u10 = -i * sinc * Complex64::new(hx, hy);
    CMatrix::from_row_slice(
        2,
        2,
        &[u00 * global, u01 * global, u10 * global, u11 * global],
    )
}

fn step_count(span: f64, dt: f64) -> usize {
    if span <= 0.0 {
        0
    } else {
        ((span / dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// Advances amplitudes from `t0` to `t1` with mid-point steps no longer than `dt`.
fn advance(amps: &mut Vec<Complex64>, h: &TimeDependentHamiltonian, t0: f64, t1: f64, dt: f64) {
    let n = step_count(t1 - t0, dt);
    if n == 0 {
        return;
    }
    let step = (t1 - t0) / n as f64;
    for k in 0..n {
        let mid = t0 + (k as f64 + 0.5) * step;
        let u = exp_step(&h.at(mid), step);
        *amps = apply_raw(u.matrix(), amps);
    }
}

/// `U(t1, t0)|state⟩` as a time-ordered product of mid-point propagators
/// `exp(−i H(t + h/2) h)` with `h = (t1 − t0)/⌈(t1 − t0)/dt⌉`.
pub fn propagate(
    state: &PureState,
    h: &TimeDependentHamiltonian,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<PureState> {
    check_span(state, h, t0, t1, dt)?;
    let mut amps = state.amplitudes().to_vec();
    advance(&mut amps, h, t0, t1, dt);
    Ok(PureState::from_unit(amps))
}

/// Propagates through the non-decreasing sample `times`, returning the state at each.
/// The evolution starts at `times[0]` from `state`.
pub fn propagate_sampled(
    state: &PureState,
    h: &TimeDependentHamiltonian,
    times: &[f64],
    dt: f64,
) -> Result<Vec<PureState>> {
    let Some(&first) = times.first() else {
        return Ok(Vec::new());
    };
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(invalid("sample times must be non-decreasing"));
    }
    check_span(state, h, first, *times.last().unwrap(), dt)?;
    let mut amps = state.amplitudes().to_vec();
    let mut out = Vec::with_capacity(times.len());
    let mut now = first;
    for &t in times {
        advance(&mut amps, h, now, t, dt);
        now = t;
        out.push(PureState::from_unit(amps.clone()));
    }
    Ok(out)
}

/// The full evolution operator `U(t1, t0)`.
pub fn evolution_operator(
    h: &TimeDependentHamiltonian,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Propagator> {
    if !(t1 >= t0) {
        return Err(invalid(format!("t1 = {t1} precedes t0 = {t0}")));
    }
    h.check_step(dt)?;
    let n = step_count(t1 - t0, dt);
    let mut u = Propagator::identity(h.dim());
    if n == 0 {
        return Ok(u);
    }
    let step = (t1 - t0) / n as f64;
    for k in 0..n {
        let mid = t0 + (k as f64 + 0.5) * step;
        u = u.then(&exp_step(&h.at(mid), step));
    }
    Ok(u)
}

fn check_span(
    state: &PureState,
    h: &TimeDependentHamiltonian,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<()> {
    if state.dim() != h.dim() {
        return Err(QfiError::DimensionMismatch {
            left: h.dim(),
            right: state.dim(),
        });
    }
    if !(t1 >= t0) {
        return Err(invalid(format!("t1 = {t1} precedes t0 = {t0}")));
    }
    h.check_step(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::pauli;
    use std::f64::consts::PI;

    fn op(m: CMatrix) -> HermitianOperator {
        HermitianOperator::new(m).unwrap()
    }

    #[test]
    fn eigenstate_survives() {
        let w = 2.0 * PI * 3.0;
        let h = TimeDependentHamiltonian::constant(op(pauli::z() * Complex64::new(w / 2.0, 0.0)));
        let zero = PureState::basis(2, 0).unwrap();
        let out = propagate(&zero, &h, 0.0, 1.37, h.default_time_step()).unwrap();
        assert!((out.fidelity(&zero).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pi_pulse_transfers_population() {
        let rabi = 2.0 * PI * 20.0;
        let h =
            TimeDependentHamiltonian::constant(op(pauli::x() * Complex64::new(rabi / 2.0, 0.0)));
        let zero = PureState::basis(2, 0).unwrap();
        let out = propagate(&zero, &h, 0.0, PI / rabi, h.default_time_step()).unwrap();
        assert!((out.population(1) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn coarse_step_is_rejected() {
        let h = TimeDependentHamiltonian::constant(op(pauli::x() * Complex64::new(10.0, 0.0)));
        let zero = PureState::basis(2, 0).unwrap();
        let err = propagate(&zero, &h, 0.0, 1.0, 0.1).unwrap_err();
        assert!(matches!(err, QfiError::TimeStepTooCoarse { .. }));
        assert!(propagate(&zero, &h, 1.0, 0.0, 0.001).is_err());
    }

    #[test]
    fn qubit_closed_form_matches_eigen_route() {
        let m = pauli::x() * Complex64::new(0.7, 0.0)
            + pauli::y() * Complex64::new(-0.4, 0.0)
            + pauli::z() * Complex64::new(1.3, 0.0)
            + pauli::identity() * Complex64::new(0.25, 0.0);
        let h = op(m.clone());
        let closed = exp_step(&h, 0.9);
        let es = eig_hermitian(&h).unwrap();
        let mut via_eig = CMatrix::zeros(2, 2);
        for (e, v) in es.eigenvalues.iter().zip(&es.eigenvectors) {
            let a = v.amplitudes();
            for r in 0..2 {
                for c in 0..2 {
                    via_eig[(r, c)] += Complex64::from_polar(1.0, -e * 0.9) * a[r] * a[c].conj();
                }
            }
        }
        assert!((closed.matrix() - via_eig).norm() < 1e-13);
    }

    #[test]
    fn sampled_matches_direct() {
        let h = TimeDependentHamiltonian::new(2, 20.0, |t| {
            HermitianOperator::new_unchecked(
                pauli::z() * Complex64::new(5.0, 0.0)
                    + pauli::x() * Complex64::new(3.0 * t.cos(), 0.0),
            )
        })
        .unwrap();
        let zero = PureState::basis(2, 0).unwrap();
        let dt = h.default_time_step();
        let times = [0.0, 0.1, 0.35, 0.35, 0.8];
        let sampled = propagate_sampled(&zero, &h, &times, dt).unwrap();
        let direct = propagate(&zero, &h, 0.0, 0.35, dt).unwrap();
        assert!((sampled[2].fidelity(&direct).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sampled[2], sampled[3]);
        let u = evolution_operator(&h, 0.35, 0.8, dt).unwrap();
        let via_op = u.apply(&sampled[3]).unwrap();
        assert!((via_op.fidelity(&sampled[4]).unwrap() - 1.0).abs() < 1e-10);
    }
}
