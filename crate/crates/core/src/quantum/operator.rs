use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, QfiError, Result};
use crate::quantum::state::check_dim;
use crate::quantum::PureState;

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;

/// Pauli matrices on the basis (|0⟩, |−1⟩).
pub mod pauli {
    use super::CMatrix;
    use num_complex::Complex64;

    const O: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);
    const I: Complex64 = Complex64::new(0.0, 1.0);

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[O, ONE, ONE, O])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[O, -I, I, O])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, O, O, -ONE])
    }
}

/// Dense Hermitian operator in angular-frequency units (rad/µs).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(invalid("operator matrix must be square"));
        }
        check_dim(matrix.nrows())?;
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(invalid("operator entries must be finite"));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let dev = hermiticity_defect(&matrix);
        if dev > HERMITIAN_TOL * scale {
            return Err(invalid(format!("matrix is not Hermitian (defect {dev:e})")));
        }
        Ok(Self { matrix })
    }

    /// For constructors that are Hermitian by construction.
    pub(crate) fn new_unchecked(matrix: CMatrix) -> Self {
        debug_assert!(hermiticity_defect(&matrix) <= 1e-9 * (1.0 + matrix.norm()));
        Self { matrix }
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            matrix: CMatrix::zeros(dim, dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// `H|ψ⟩` as a raw (unnormalized) amplitude vector.
    pub fn apply(&self, state: &PureState) -> Result<Vec<Complex64>> {
        if state.dim() != self.dim() {
            return Err(QfiError::DimensionMismatch {
                left: self.dim(),
                right: state.dim(),
            });
        }
        Ok(apply_raw(&self.matrix, state.amplitudes()))
    }

    /// Frobenius norm of `self − other`.
    pub fn distance(&self, other: &HermitianOperator) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    pub fn scaled(&self, factor: f64) -> HermitianOperator {
        HermitianOperator {
            matrix: &self.matrix * Complex64::new(factor, 0.0),
        }
    }

    pub fn sum(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        if self.dim() != other.dim() {
            return Err(QfiError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(HermitianOperator {
            matrix: &self.matrix + &other.matrix,
        })
    }

    /// `self ⊗ other` for two single-qubit operators.
    pub fn kron(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        if self.dim() != 2 || other.dim() != 2 {
            return Err(invalid(
                "kron is only defined for two single-qubit operators",
            ));
        }
        Ok(HermitianOperator {
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }
}

fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}

/// Unitary evolution operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    matrix: CMatrix,
}

impl Propagator {
    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub(crate) fn from_matrix(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        if state.dim() != self.dim() {
            return Err(QfiError::DimensionMismatch {
                left: self.dim(),
                right: state.dim(),
            });
        }
        Ok(PureState::from_unit(apply_raw(
            &self.matrix,
            state.amplitudes(),
        )))
    }

    /// The evolution `self` followed by `later`, i.e. `later · self`.
    pub fn then(&self, later: &Propagator) -> Propagator {
        Propagator {
            matrix: &later.matrix * &self.matrix,
        }
    }

    pub fn pow(&self, mut n: u64) -> Propagator {
        let mut result = CMatrix::identity(self.dim(), self.dim());
        let mut base = self.matrix.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = &base * &result;
            }
            base = &base * &base;
            n >>= 1;
        }
        Propagator { matrix: result }
    }

    pub fn adjoint(&self) -> Propagator {
        Propagator {
            matrix: self.matrix.adjoint(),
        }
    }

    /// Max-entry deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.matrix.adjoint() * &self.matrix;
        let id = CMatrix::identity(self.dim(), self.dim());
        (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn apply_raw(m: &CMatrix, amps: &[Complex64]) -> Vec<Complex64> {
    let n = amps.len();
    (0..n)
        .map(|r| (0..n).map(|c| m[(r, c)] * amps[c]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paulis_are_hermitian() {
        for m in [pauli::x(), pauli::y(), pauli::z()] {
            assert!(HermitianOperator::new(m).is_ok());
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = pauli::x();
        m[(0, 1)] = Complex64::new(1.0, 0.5);
        assert!(HermitianOperator::new(m).is_err());
        assert!(HermitianOperator::new(CMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn kron_builds_four_level_operator() {
        let z = HermitianOperator::new(pauli::z()).unwrap();
        let zz = z.kron(&z).unwrap();
        assert_eq!(zz.dim(), 4);
        assert_eq!(zz.entry(3, 3), Complex64::new(1.0, 0.0));
        assert_eq!(zz.entry(1, 1), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn propagator_power_matches_repeated_product() {
        let theta = 0.3_f64;
        let (s, c) = theta.sin_cos();
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(c, 0.0),
                Complex64::new(0.0, -s),
                Complex64::new(0.0, -s),
                Complex64::new(c, 0.0),
            ],
        );
        let u = Propagator::from_matrix(m);
        let mut acc = Propagator::identity(2);
        for _ in 0..13 {
            acc = acc.then(&u);
        }
        let p = u.pow(13);
        assert!((acc.matrix() - p.matrix()).norm() < 1e-12);
    }
}
