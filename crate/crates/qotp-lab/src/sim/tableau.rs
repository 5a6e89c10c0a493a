use nalgebra::DMatrix;

use super::statevector::{StateVector, MAX_SV_QUBITS};
use super::{check_gate, Backend, Pick, SimError, SingleMeasurement};
use crate::pauli::{get_bit, i_pow, set_bit, words_for, Gate, PauliKind, PauliOperator, C64};

pub const MAX_TAB_QUBITS: usize = 4096;

/// Stabilizer state with destabilizer rows, all rows carrying exact phases.
///
/// Stabilizer rows satisfy `S_j|φ⟩ = |φ⟩`. Destabilizers commute with each
/// other, are Hermitian, and `D_i` anticommutes with `S_j` iff `i == j`.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerTableau {
    n: usize,
    pub(crate) destab: Vec<PauliOperator>,
    pub(crate) stab: Vec<PauliOperator>,
}

/// `R = i^lambda · D_beta · S_sigma` (products in ascending index order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub beta: Vec<u64>,
    pub sigma: Vec<u64>,
    pub lambda: u8,
}

impl StabilizerTableau {
    /// `|0…0⟩`.
    pub fn zero(n: usize) -> Result<Self, SimError> {
        if n > MAX_TAB_QUBITS {
            return Err(SimError::Capacity { backend: "tab", n, limit: MAX_TAB_QUBITS });
        }
        Ok(StabilizerTableau {
            n,
            destab: (0..n).map(|q| PauliOperator::single(n, q, PauliKind::X)).collect(),
            stab: (0..n).map(|q| PauliOperator::single(n, q, PauliKind::Z)).collect(),
        })
    }

    /// Builds a tableau from explicit rows, checking the pairing relations.
    pub fn from_rows(destab: Vec<PauliOperator>, stab: Vec<PauliOperator>) -> Result<Self, SimError> {
        let n = stab.len();
        if destab.len() != n || stab.iter().chain(&destab).any(|p| p.n() != n) {
            return Err(SimError::Inconsistent);
        }
        let t = StabilizerTableau { n, destab, stab };
        if !t.is_consistent() {
            return Err(SimError::Inconsistent);
        }
        Ok(t)
    }

    pub fn stabilizers(&self) -> &[PauliOperator] {
        &self.stab
    }

    pub fn destabilizers(&self) -> &[PauliOperator] {
        &self.destab
    }

    /// Checks the commutation pattern and Hermiticity of all rows.
    pub fn is_consistent(&self) -> bool {
        for i in 0..self.n {
            if !self.stab[i].is_hermitian() || !self.destab[i].is_hermitian() {
                return false;
            }
            for j in 0..self.n {
                if !self.stab[i].commutes_with(&self.stab[j]) || !self.destab[i].commutes_with(&self.destab[j]) {
                    return false;
                }
                if self.destab[i].commutes_with(&self.stab[j]) != (i != j) {
                    return false;
                }
            }
        }
        true
    }

    /// Writes `R` as `i^λ D_β S_σ`.
    pub fn decompose(&self, r: &PauliOperator) -> Decomposition {
        let w = words_for(self.n);
        let mut beta = vec![0u64; w];
        let mut sigma = vec![0u64; w];
        let mut prod = PauliOperator::identity(self.n);
        for j in 0..self.n {
            if !r.commutes_with(&self.stab[j]) {
                set_bit(&mut beta, j, true);
                prod.mul_assign_right(&self.destab[j]);
            }
        }
        for i in 0..self.n {
            if !r.commutes_with(&self.destab[i]) {
                set_bit(&mut sigma, i, true);
                prod.mul_assign_right(&self.stab[i]);
            }
        }
        debug_assert!(prod.x_words() == r.x_words() && prod.z_words() == r.z_words());
        let lambda = (r.phase_exp() + 4 - prod.phase_exp()) & 3;
        Decomposition { beta, sigma, lambda }
    }

    /// `D_b` as an explicit Pauli.
    pub fn destab_product(&self, b: &[u64]) -> PauliOperator {
        let mut p = PauliOperator::identity(self.n);
        for i in 0..self.n {
            if get_bit(b, i) {
                p.mul_assign_right(&self.destab[i]);
            }
        }
        p
    }

    fn conjugate_rows(&mut self, g: &Gate) {
        for row in self.destab.iter_mut().chain(self.stab.iter_mut()) {
            row.conjugate_forward_gate(g);
        }
    }

    /// Index of a stabilizer row anticommuting with `Z_q`, if any.
    pub(crate) fn random_pivot(&self, q: usize) -> Option<usize> {
        (0..self.n).find(|&j| self.stab[j].x_bit(q))
    }

    /// Collapses onto `√2·Π_m|φ⟩` for a `Z_q` measurement whose outcome is random.
    pub(crate) fn collapse_random(&mut self, q: usize, p: usize, outcome: bool) {
        let g = self.stab[p].clone();
        for i in 0..self.n {
            if i != p && self.destab[i].x_bit(q) {
                self.destab[i].mul_assign_right(&g);
            }
            if i != p && self.stab[i].x_bit(q) {
                self.stab[i].mul_assign_right(&g);
            }
        }
        self.destab[p] = g;
        let mut z = PauliOperator::single(self.n, q, PauliKind::Z);
        if outcome {
            z.set_phase_exp(2);
        }
        self.stab[p] = z;
    }

    /// Eigenvalue bit of `Z_q` when it is determined by the stabilizers.
    pub(crate) fn deterministic_outcome(&self, q: usize) -> bool {
        let mut p = PauliOperator::identity(self.n);
        for i in 0..self.n {
            if self.destab[i].x_bit(q) {
                p.mul_assign_right(&self.stab[i]);
            }
        }
        debug_assert!(p.phase_exp() % 2 == 0);
        p.phase_exp() == 2
    }

    /// A computational basis string with nonzero overlap.
    fn support_string(&self) -> Vec<bool> {
        let mut t = self.clone();
        (0..self.n)
            .map(|q| match t.random_pivot(q) {
                Some(p) => {
                    t.collapse_random(q, p, false);
                    false
                }
                None => t.deterministic_outcome(q),
            })
            .collect()
    }

    /// Expectation of a Hermitian or non-Hermitian Pauli.
    pub fn pauli_expectation(&self, p: &PauliOperator) -> C64 {
        let d = self.decompose(p);
        if d.beta.iter().any(|&w| w != 0) {
            C64::new(0.0, 0.0)
        } else {
            i_pow(d.lambda)
        }
    }

    pub(crate) fn grow_by(&mut self, k: usize) {
        let n = self.n + k;
        for row in self.destab.iter_mut().chain(self.stab.iter_mut()) {
            row.grow(n);
        }
        for q in self.n..n {
            self.destab.push(PauliOperator::single(n, q, PauliKind::X));
            self.stab.push(PauliOperator::single(n, q, PauliKind::Z));
        }
        self.n = n;
    }
}

/// Reduced density matrix on `keep` from Pauli expectations.
pub(crate) fn density_from_expectations(
    n: usize,
    keep: &[usize],
    expect: impl Fn(&PauliOperator) -> C64,
) -> Result<DMatrix<C64>, SimError> {
    let k = keep.len();
    if k > super::MAX_EXPANSION_KEEP {
        return Err(SimError::KeepTooLarge(k));
    }
    let dim = 1usize << k;
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for idx in 0..(1usize << (2 * k)) {
        let local = crate::pauli::pauli_from_index(k, idx);
        let full = local.embed(n, keep);
        let e = expect(&full);
        if e.norm() < 1e-15 {
            continue;
        }
        rho += local.to_dense() * e;
    }
    Ok(rho / C64::new(dim as f64, 0.0))
}

impl Backend for StabilizerTableau {
    fn n(&self) -> usize {
        self.n
    }

    fn apply_gate(&mut self, g: &Gate) -> Result<(), SimError> {
        check_gate(self.n, g)?;
        if !g.is_clifford() {
            return Err(SimError::NotClifford);
        }
        self.conjugate_rows(g);
        Ok(())
    }

    fn apply_pauli(&mut self, p: &PauliOperator) -> Result<(), SimError> {
        if p.n() != self.n {
            return Err(SimError::Size(p.n(), self.n));
        }
        for row in self.destab.iter_mut().chain(self.stab.iter_mut()) {
            if !row.commutes_with(p) {
                row.set_phase_exp(row.phase_exp() + 2);
            }
        }
        Ok(())
    }

    fn apply_combination(&mut self, _alpha: C64, _beta: C64, _r: &PauliOperator) -> Result<(), SimError> {
        Err(SimError::NotClifford)
    }

    fn measure(&mut self, q: usize, pick: Pick) -> Result<SingleMeasurement, SimError> {
        if q >= self.n {
            return Err(SimError::OutOfRange(q, self.n));
        }
        match self.random_pivot(q) {
            Some(p) => {
                let bit = match pick {
                    Pick::Random(u) => u < 0.5,
                    Pick::Forced(b) => b,
                };
                self.collapse_random(q, p, bit);
                Ok(SingleMeasurement { bit, probability: 0.5 })
            }
            None => {
                let bit = self.deterministic_outcome(q);
                if let Pick::Forced(b) = pick {
                    if b != bit {
                        return Err(SimError::ZeroProbability);
                    }
                }
                Ok(SingleMeasurement { bit, probability: 1.0 })
            }
        }
    }

    fn expectation(&self, p: &PauliOperator) -> Result<C64, SimError> {
        if p.n() != self.n {
            return Err(SimError::Size(p.n(), self.n));
        }
        Ok(self.pauli_expectation(p))
    }

    fn density_of(&self, keep: &[usize]) -> Result<DMatrix<C64>, SimError> {
        super::check_keep(self.n, keep)?;
        if self.n <= super::DENSE_CONVERSION_QUBITS {
            return self.to_statevector()?.density_of(keep);
        }
        density_from_expectations(self.n, keep, |p| self.pauli_expectation(p))
    }

    fn append_qubits(&mut self, k: usize) -> Result<std::ops::Range<usize>, SimError> {
        if self.n + k > MAX_TAB_QUBITS {
            return Err(SimError::Capacity { backend: "tab", n: self.n + k, limit: MAX_TAB_QUBITS });
        }
        let start = self.n;
        self.grow_by(k);
        Ok(start..self.n)
    }

    fn to_statevector(&self) -> Result<StateVector, SimError> {
        if self.n > MAX_SV_QUBITS {
            return Err(SimError::Capacity { backend: "sv", n: self.n, limit: MAX_SV_QUBITS });
        }
        let x = self.support_string();
        let idx: usize = x.iter().enumerate().map(|(q, &b)| (b as usize) << q).sum();
        let mut amps = vec![C64::new(0.0, 0.0); 1 << self.n];
        amps[idx] = C64::new(1.0, 0.0);
        let mut v = StateVector::from_amplitudes(amps)?;
        for s in &self.stab {
            let mut sv = v.clone();
            sv.apply_pauli(s)?;
            let merged: Vec<C64> = v.amplitudes().iter().zip(sv.amplitudes()).map(|(a, b)| (a + b) * 0.5).collect();
            v = StateVector::from_amplitudes(merged)?;
        }
        v.normalize();
        Ok(v)
    }
}
