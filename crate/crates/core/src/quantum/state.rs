use num_complex::Complex64;

use crate::error::{invalid, QfiError, Result};
use crate::quantum::HermitianOperator;

/// Normalized pure state over the computational basis (dimension 2 or 4).
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 4 {
        Ok(())
    } else {
        Err(invalid(format!("dimension must be 2 or 4, got {dim}")))
    }
}

impl PureState {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(invalid("state amplitudes must be finite"));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(invalid("cannot normalize the zero vector"));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(invalid(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    /// Skips normalization; callers guarantee a unit vector.
    pub(crate) fn from_unit(amplitudes: Vec<Complex64>) -> Self {
        debug_assert!(check_dim(amplitudes.len()).is_ok());
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn same_dim(&self, other: &PureState) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(QfiError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            })
        }
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &PureState) -> Result<Complex64> {
        self.same_dim(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    /// Probability of finding the state in basis state `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn expectation(&self, op: &HermitianOperator) -> Result<f64> {
        let applied = op.apply(self)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&applied)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .re)
    }

    /// Multiplies every amplitude by `phase` (expected to have unit modulus).
    pub fn with_global_phase(&self, phase: Complex64) -> PureState {
        PureState {
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }

    /// Returns this state rephased so that its overlap with `reference` is real and
    /// non-negative. Also returns the magnitude of that overlap.
    pub fn aligned_to(&self, reference: &PureState) -> Result<(PureState, f64)> {
        let ov = reference.overlap(self)?;
        let mag = ov.norm();
        if mag < 1e-300 {
            return Ok((self.clone(), 0.0));
        }
        Ok((self.with_global_phase(ov.conj() / mag), mag))
    }

    /// Tensor product `self ⊗ other`; both factors must be qubits.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        if self.dim() != 2 || other.dim() != 2 {
            return Err(invalid("tensor product is only defined for two qubits"));
        }
        let mut amps = Vec::with_capacity(4);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        Ok(PureState::from_unit(amps))
    }
}
