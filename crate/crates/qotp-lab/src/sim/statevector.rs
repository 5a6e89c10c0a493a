use nalgebra::{DMatrix, DVector};

use super::{check_gate, Backend, Pick, SimError, SingleMeasurement};
use crate::pauli::{i_pow, Gate, PauliOperator, C64};

pub const MAX_SV_QUBITS: usize = 24;

/// Dense state vector; basis index bit `q` is qubit `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self, SimError> {
        if n > MAX_SV_QUBITS {
            return Err(SimError::Capacity { backend: "sv", n, limit: MAX_SV_QUBITS });
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, SimError> {
        let dim = amps.len();
        if !dim.is_power_of_two() {
            return Err(SimError::Dimension(dim));
        }
        let n = dim.trailing_zeros() as usize;
        if n > MAX_SV_QUBITS {
            return Err(SimError::Capacity { backend: "sv", n, limit: MAX_SV_QUBITS });
        }
        Ok(StateVector { n, amps })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn to_dvector(&self) -> DVector<C64> {
        DVector::from_vec(self.amps.clone())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let s = self.norm_sqr().sqrt();
        if s > 0.0 {
            for a in &mut self.amps {
                *a /= s;
            }
        }
    }

    /// Applies an arbitrary 2x2 matrix `[[a, b], [c, d]]` to qubit `q`.
    pub fn apply_1q(&mut self, q: usize, m: [C64; 4]) {
        let bit = 1usize << q;
        for j in 0..self.amps.len() {
            if j & bit == 0 {
                let a0 = self.amps[j];
                let a1 = self.amps[j | bit];
                self.amps[j] = m[0] * a0 + m[1] * a1;
                self.amps[j | bit] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    /// Applies a dense unitary on `qubits` (qubits[0] is the low bit of `u`'s index).
    pub fn apply_dense(&mut self, qubits: &[usize], u: &DMatrix<C64>) {
        let k = qubits.len();
        assert_eq!(u.nrows(), 1 << k);
        let mask: usize = qubits.iter().map(|q| 1usize << q).sum();
        let mut local = vec![C64::new(0.0, 0.0); 1 << k];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            let idx = |l: usize| {
                let mut j = base;
                for (t, &q) in qubits.iter().enumerate() {
                    if (l >> t) & 1 == 1 {
                        j |= 1 << q;
                    }
                }
                j
            };
            for (l, slot) in local.iter_mut().enumerate() {
                *slot = self.amps[idx(l)];
            }
            for r in 0..(1 << k) {
                let mut acc = C64::new(0.0, 0.0);
                for (c, v) in local.iter().enumerate() {
                    acc += u[(r, c)] * v;
                }
                self.amps[idx(r)] = acc;
            }
        }
    }

    /// `⟨ψ|φ⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Appends a single-qubit state `(a0, a1)` as the new highest qubit.
    pub fn append_qubit_state(&mut self, a0: C64, a1: C64) -> Result<usize, SimError> {
        if self.n + 1 > MAX_SV_QUBITS {
            return Err(SimError::Capacity { backend: "sv", n: self.n + 1, limit: MAX_SV_QUBITS });
        }
        let mut amps = Vec::with_capacity(self.amps.len() * 2);
        amps.extend(self.amps.iter().map(|v| v * a0));
        amps.extend(self.amps.iter().map(|v| v * a1));
        self.amps = amps;
        self.n += 1;
        Ok(self.n - 1)
    }
}

impl Backend for StateVector {
    fn n(&self) -> usize {
        self.n
    }

    fn apply_gate(&mut self, g: &Gate) -> Result<(), SimError> {
        check_gate(self.n, g)?;
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match *g {
            Gate::Cnot(c, t) => {
                let (cb, tb) = (1usize << c, 1usize << t);
                for j in 0..self.amps.len() {
                    if j & cb != 0 && j & tb == 0 {
                        self.amps.swap(j, j | tb);
                    }
                }
            }
            Gate::X(q) => self.apply_1q(q, [o, l, l, o]),
            Gate::Y(q) => self.apply_1q(q, [o, C64::new(0.0, -1.0), C64::new(0.0, 1.0), o]),
            Gate::Z(q) => self.apply_1q(q, [l, o, o, -l]),
            Gate::H(q) => {
                let h = C64::new(s, 0.0);
                self.apply_1q(q, [h, h, h, -h])
            }
            Gate::K(q) => self.apply_1q(q, [l, o, o, C64::new(0.0, 1.0)]),
            Gate::T(q) => self.apply_1q(q, [l, o, o, C64::new(s, s)]),
        }
        Ok(())
    }

    fn apply_pauli(&mut self, p: &PauliOperator) -> Result<(), SimError> {
        if p.n() != self.n {
            return Err(SimError::Size(p.n(), self.n));
        }
        let xm = p.x_mask() as usize;
        let zm = p.z_mask() as usize;
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (j, a) in self.amps.iter().enumerate() {
            let sign = if (zm & j).count_ones() % 2 == 1 { 2 } else { 0 };
            out[j ^ xm] = a * i_pow(p.phase_exp() + sign);
        }
        self.amps = out;
        Ok(())
    }

    fn apply_combination(&mut self, alpha: C64, beta: C64, r: &PauliOperator) -> Result<(), SimError> {
        let mut other = self.clone();
        other.apply_pauli(r)?;
        for (a, b) in self.amps.iter_mut().zip(other.amps) {
            *a = alpha * *a + beta * b;
        }
        Ok(())
    }

    fn measure(&mut self, q: usize, pick: Pick) -> Result<SingleMeasurement, SimError> {
        if q >= self.n {
            return Err(SimError::OutOfRange(q, self.n));
        }
        let bit = 1usize << q;
        let total = self.norm_sqr();
        let p1: f64 = self.amps.iter().enumerate().filter(|(j, _)| j & bit != 0).map(|(_, a)| a.norm_sqr()).sum::<f64>() / total;
        let outcome = match pick {
            Pick::Random(u) => u < p1,
            Pick::Forced(b) => b,
        };
        let prob = if outcome { p1 } else { 1.0 - p1 };
        if prob <= 0.0 {
            return Err(SimError::ZeroProbability);
        }
        for (j, a) in self.amps.iter_mut().enumerate() {
            if ((j & bit) != 0) != outcome {
                *a = C64::new(0.0, 0.0);
            }
        }
        self.normalize();
        Ok(SingleMeasurement { bit: outcome, probability: prob })
    }

    fn expectation(&self, p: &PauliOperator) -> Result<C64, SimError> {
        let mut other = self.clone();
        other.apply_pauli(p)?;
        Ok(self.inner(&other))
    }

    fn density_of(&self, keep: &[usize]) -> Result<DMatrix<C64>, SimError> {
        super::check_keep(self.n, keep)?;
        let k = keep.len();
        let dim = 1usize << k;
        let keep_mask: usize = keep.iter().map(|q| 1usize << q).sum();
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        let local = |j: usize| {
            let mut l = 0;
            for (t, &q) in keep.iter().enumerate() {
                if (j >> q) & 1 == 1 {
                    l |= 1 << t;
                }
            }
            l
        };
        // group amplitudes by the traced-out configuration
        let rest_positions: Vec<usize> = (0..self.n).filter(|q| keep_mask >> q & 1 == 0).collect();
        let mut block = vec![C64::new(0.0, 0.0); dim];
        for r in 0..(1usize << rest_positions.len()) {
            let mut base = 0;
            for (t, &q) in rest_positions.iter().enumerate() {
                if (r >> t) & 1 == 1 {
                    base |= 1 << q;
                }
            }
            for l in 0..dim {
                let mut j = base;
                for (t, &q) in keep.iter().enumerate() {
                    if (l >> t) & 1 == 1 {
                        j |= 1 << q;
                    }
                }
                debug_assert_eq!(local(j), l);
                block[l] = self.amps[j];
            }
            for a in 0..dim {
                if block[a] == C64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..dim {
                    rho[(a, b)] += block[a] * block[b].conj();
                }
            }
        }
        let tr: f64 = (0..dim).map(|i| rho[(i, i)].re).sum();
        Ok(rho / C64::new(tr, 0.0))
    }

    fn append_qubits(&mut self, k: usize) -> Result<std::ops::Range<usize>, SimError> {
        let start = self.n;
        for _ in 0..k {
            self.append_qubit_state(C64::new(1.0, 0.0), C64::new(0.0, 0.0))?;
        }
        Ok(start..self.n)
    }

    fn to_statevector(&self) -> Result<StateVector, SimError> {
        Ok(self.clone())
    }
}
