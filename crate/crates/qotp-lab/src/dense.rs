//! Small dense linear-algebra helpers shared by the oracles.

use nalgebra::{DMatrix, DVector};

use crate::pauli::{Gate, C64};

/// Trace distance `½‖a − b‖₁` of two Hermitian matrices.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let d = a - b;
    let h = (&d + d.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    0.5 * eig.eigenvalues.iter().map(|v| v.abs()).sum::<f64>()
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity_pure(psi: &DVector<C64>, rho: &DMatrix<C64>) -> f64 {
    (psi.adjoint() * rho * psi)[(0, 0)].re
}

/// `|ψ⟩⟨ψ|`.
pub fn projector(psi: &DVector<C64>) -> DMatrix<C64> {
    psi * psi.adjoint()
}

/// Largest entrywise modulus of `a − b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Distance between two matrices after removing the best global phase.
pub fn diff_up_to_phase(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let inner: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    if inner.norm() < 1e-300 {
        return max_abs_diff(a, b);
    }
    let phase = inner / inner.norm();
    max_abs_diff(&(a * phase), b)
}

/// Tensor product of little-endian operators: `lo` acts on the low qubits.
pub fn kron_le(lo: &DMatrix<C64>, hi: &DMatrix<C64>) -> DMatrix<C64> {
    hi.kronecker(lo)
}

/// Single-qubit Pauli-eigenstate inputs |0⟩, |1⟩, |+⟩, |−⟩, |+i⟩, |−i⟩.
pub fn pauli_eigenstates() -> Vec<DVector<C64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = |a: f64, b: f64, c: f64, d: f64| DVector::from_vec(vec![C64::new(a, b), C64::new(c, d)]);
    vec![
        r(1.0, 0.0, 0.0, 0.0),
        r(0.0, 0.0, 1.0, 0.0),
        r(s, 0.0, s, 0.0),
        r(s, 0.0, -s, 0.0),
        r(s, 0.0, 0.0, s),
        r(s, 0.0, 0.0, -s),
    ]
}

/// Preparation circuits on qubit 0 for the states of [`pauli_eigenstates`], in the same order.
pub fn pauli_eigenstate_preps() -> Vec<Vec<Gate>> {
    vec![
        vec![],
        vec![Gate::X(0)],
        vec![Gate::H(0)],
        vec![Gate::X(0), Gate::H(0)],
        vec![Gate::H(0), Gate::K(0)],
        vec![Gate::X(0), Gate::H(0), Gate::K(0)],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_states_have_distance_one() {
        let e = pauli_eigenstates();
        let d = trace_distance(&projector(&e[0]), &projector(&e[1]));
        assert!((d - 1.0).abs() < 1e-12);
        let d = trace_distance(&projector(&e[0]), &projector(&e[2]));
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn preps_match_eigenstates() {
        use crate::sim::{Backend, StateVector};
        for (psi, prep) in pauli_eigenstates().iter().zip(pauli_eigenstate_preps()) {
            let mut s = StateVector::zero(1).unwrap();
            for g in &prep {
                s.apply_gate(g).unwrap();
            }
            assert!(max_abs_diff(&s.density_of(&[0]).unwrap(), &projector(psi)) < 1e-12);
        }
    }
}
