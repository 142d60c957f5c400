//! States, Hermitian operators, eigendecomposition and exact piecewise-constant
//! propagation for two- and four-level systems. Units: µs and rad/µs.

mod eigen;
mod evolution;
mod operator;
mod state;

pub use eigen::{eig_hermitian, EigenSystem};
pub use evolution::{
    evolution_operator, exp_step, propagate, propagate_sampled, TimeDependentHamiltonian,
    DEFAULT_STEPS_PER_PERIOD, MAX_STEP_FRACTION,
};
pub use operator::{pauli, CMatrix, HermitianOperator, Propagator};
pub use state::PureState;

use num_complex::Complex64;

use crate::error::Result;

/// `⟨a|b⟩`.
pub fn overlap(a: &PureState, b: &PureState) -> Result<Complex64> {
    a.overlap(b)
}
