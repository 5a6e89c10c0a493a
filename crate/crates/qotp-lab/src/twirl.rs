//! Pauli twirling of dense operators.
//!
//! Averaging `P U P ρ P U* P` over all `n`-qubit Paulis `P` leaves the Pauli channel
//! `ρ ↦ Σ_Q |α_Q|² QρQ*`, where `U = Σ_Q α_Q Q`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::pauli::{pauli_from_index, C64};

fn gaussian_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of `R` removed.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let qr = gaussian_matrix(dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random full-rank density matrix `GG*/Tr(GG*)`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let g = gaussian_matrix(dim, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn qubits_of(dim: usize) -> usize {
    assert!(dim.is_power_of_two(), "dimension {dim} is not a power of two");
    dim.trailing_zeros() as usize
}

/// `α_Q = Tr(Q* U)/2ⁿ`, indexed like [`pauli_from_index`].
pub fn pauli_coefficients(u: &DMatrix<C64>) -> Vec<C64> {
    let n = qubits_of(u.nrows());
    let dim = u.nrows() as f64;
    (0..1usize << (2 * n))
        .map(|i| (pauli_from_index(n, i).to_dense().adjoint() * u).trace() / dim)
        .collect()
}

/// `4⁻ⁿ Σ_P P U P ρ P U* P`.
pub fn twirl(u: &DMatrix<C64>, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let n = qubits_of(u.nrows());
    let count = 1usize << (2 * n);
    let mut acc = DMatrix::zeros(u.nrows(), u.ncols());
    for i in 0..count {
        let p = pauli_from_index(n, i).to_dense();
        let sandwich = &p * u * &p;
        acc += &sandwich * rho * sandwich.adjoint();
    }
    acc / C64::new(count as f64, 0.0)
}

/// `Σ_Q |α_Q|² QρQ*`.
pub fn pauli_channel(alpha: &[C64], rho: &DMatrix<C64>) -> DMatrix<C64> {
    let n = qubits_of(rho.nrows());
    let mut acc = DMatrix::zeros(rho.nrows(), rho.ncols());
    for (i, a) in alpha.iter().enumerate() {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let q = pauli_from_index(n, i).to_dense();
        acc += (&q * rho * q.adjoint()) * C64::new(w, 0.0);
    }
    acc
}
