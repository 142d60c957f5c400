use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::Result;
use crate::quantum::{HermitianOperator, PureState};

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<PureState>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn ground(&self) -> &PureState {
        &self.eigenvectors[0]
    }

    /// `Σ εₖ |vₖ⟩⟨vₖ|`.
    pub fn reconstruct(&self) -> HermitianOperator {
        let n = self.dim();
        let mut m = crate::quantum::CMatrix::zeros(n, n);
        for (e, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let a = v.amplitudes();
            for r in 0..n {
                for c in 0..n {
                    m[(r, c)] += a[r] * a[c].conj() * *e;
                }
            }
        }
        HermitianOperator::new_unchecked(m)
    }
}

/// Eigendecomposition of a Hermitian operator.
///
/// Each eigenvector is rephased so that its largest-magnitude component is real and
/// positive (the first such component when several tie).
pub fn eig_hermitian(h: &HermitianOperator) -> Result<EigenSystem> {
    let n = h.dim();
    let decomposition = SymmetricEigen::new(h.matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        decomposition.eigenvalues[a]
            .partial_cmp(&decomposition.eigenvalues[b])
            .expect("eigenvalues of a finite Hermitian matrix are finite")
    });

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Vec::with_capacity(n);
    for k in order {
        eigenvalues.push(decomposition.eigenvalues[k]);
        let col: Vec<Complex64> = decomposition
            .eigenvectors
            .column(k)
            .iter()
            .copied()
            .collect();
        eigenvectors.push(fix_phase(col)?);
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

fn fix_phase(amps: Vec<Complex64>) -> Result<PureState> {
    let max = amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let pivot = amps
        .iter()
        .position(|a| a.norm() >= max * (1.0 - 1e-9))
        .expect("non-empty eigenvector");
    let phase = amps[pivot].conj() / amps[pivot].norm();
    PureState::new(amps.into_iter().map(|a| a * phase).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::pauli;
    use std::f64::consts::PI;

    #[test]
    fn diagonal_operator() {
        let a = 2.0 * PI * 10.0;
        let h = HermitianOperator::new(pauli::z() * Complex64::new(a / 2.0, 0.0)).unwrap();
        let es = eig_hermitian(&h).unwrap();
        assert!((es.eigenvalues[0] + PI * 10.0).abs() < 1e-12);
        assert!((es.eigenvalues[1] - PI * 10.0).abs() < 1e-12);
        // ascending order puts |−1⟩ first
        assert!((es.eigenvectors[0].population(1) - 1.0).abs() < 1e-12);
        assert!((es.eigenvectors[1].population(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn largest_component_is_real_positive() {
        let h = HermitianOperator::new(pauli::y()).unwrap();
        let es = eig_hermitian(&h).unwrap();
        for v in &es.eigenvectors {
            let a = v.amplitudes();
            let pivot = if a[0].norm() >= a[1].norm() * (1.0 - 1e-9) {
                a[0]
            } else {
                a[1]
            };
            assert!(pivot.im.abs() < 1e-14 && pivot.re > 0.0);
        }
    }
}
