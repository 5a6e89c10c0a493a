//! Exact Pauli and Clifford algebra in symplectic form.
//!
//! A Pauli is stored as `i^phase · X^x · Z^z` with all X factors to the left
//! of all Z factors, so `Y = i·X·Z` has `x = z = 1, phase = 1`.
//! Qubit `j` is bit `j` of the packed words and character `j` of the text
//! form (`"+XIZ"` has X on qubit 0).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("qubit count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("cannot parse Pauli string {0:?}")]
    Parse(String),
    #[error("matrix dimension {0} is not a power of two")]
    Dimension(usize),
    #[error("qubit {0} out of range for {1} qubits")]
    OutOfRange(usize, usize),
    #[error("permutation mapping is not a bijection")]
    NotBijection,
}

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

#[inline]
pub(crate) fn get_bit(w: &[u64], q: usize) -> bool {
    (w[q >> 6] >> (q & 63)) & 1 == 1
}

#[inline]
pub(crate) fn set_bit(w: &mut [u64], q: usize, v: bool) {
    if v {
        w[q >> 6] |= 1 << (q & 63);
    } else {
        w[q >> 6] &= !(1 << (q & 63));
    }
}

#[inline]
pub(crate) fn flip_bit(w: &mut [u64], q: usize) {
    w[q >> 6] ^= 1 << (q & 63);
}

/// `i^k` for `k` mod 4.
pub fn i_pow(k: u8) -> C64 {
    match k & 3 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Single-qubit Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliKind {
    I,
    X,
    Y,
    Z,
}

impl PauliKind {
    pub const ALL: [PauliKind; 4] = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];

    pub fn bits(self) -> (bool, bool) {
        match self {
            PauliKind::I => (false, false),
            PauliKind::X => (true, false),
            PauliKind::Y => (true, true),
            PauliKind::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliKind::I,
            (true, false) => PauliKind::X,
            (true, true) => PauliKind::Y,
            (false, true) => PauliKind::Z,
        }
    }

    fn letter(self) -> char {
        match self {
            PauliKind::I => 'I',
            PauliKind::X => 'X',
            PauliKind::Y => 'Y',
            PauliKind::Z => 'Z',
        }
    }
}

/// n-qubit Pauli operator `i^phase · X^x · Z^z`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        PauliOperator { n, x: vec![0; w], z: vec![0; w], phase: 0 }
    }

    /// Builds `i^phase X^x Z^z` from explicit bit slices.
    pub fn from_bits(x: &[bool], z: &[bool], phase: u8) -> Result<Self, PauliError> {
        if x.len() != z.len() {
            return Err(PauliError::SizeMismatch(x.len(), z.len()));
        }
        let mut p = PauliOperator::identity(x.len());
        for q in 0..x.len() {
            set_bit(&mut p.x, q, x[q]);
            set_bit(&mut p.z, q, z[q]);
        }
        p.phase = phase & 3;
        Ok(p)
    }

    /// Hermitian single-qubit Pauli `kind` on qubit `q`.
    pub fn single(n: usize, q: usize, kind: PauliKind) -> Self {
        let mut p = PauliOperator::identity(n);
        p.set_kind(q, kind);
        p
    }

    /// Tensor product of Hermitian letters with coefficient +1.
    pub fn from_kinds(kinds: &[PauliKind]) -> Self {
        let mut p = PauliOperator::identity(kinds.len());
        for (q, k) in kinds.iter().enumerate() {
            p.set_kind(q, *k);
        }
        p
    }

    /// X on every qubit in `support`.
    pub fn x_on(n: usize, support: &[usize]) -> Self {
        let mut p = PauliOperator::identity(n);
        for &q in support {
            set_bit(&mut p.x, q, true);
        }
        p
    }

    /// Z on every qubit in `support`.
    pub fn z_on(n: usize, support: &[usize]) -> Self {
        let mut p = PauliOperator::identity(n);
        for &q in support {
            set_bit(&mut p.z, q, true);
        }
        p
    }

    /// Uniformly random Hermitian Pauli (phase chosen so that the operator is Hermitian with sign +).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut p = PauliOperator::identity(n);
        for q in 0..n {
            let v: u8 = rng.gen_range(0..4);
            p.set_kind(q, [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z][v as usize]);
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Appends identity factors up to `new_n` qubits.
    pub fn grow(&mut self, new_n: usize) {
        assert!(new_n >= self.n);
        let w = words_for(new_n);
        self.x.resize(w, 0);
        self.z.resize(w, 0);
        self.n = new_n;
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn set_phase_exp(&mut self, k: u8) {
        self.phase = k & 3;
    }

    pub(crate) fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub(crate) fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn x_bit(&self, q: usize) -> bool {
        get_bit(&self.x, q)
    }

    pub fn z_bit(&self, q: usize) -> bool {
        get_bit(&self.z, q)
    }

    pub fn x_bits(&self) -> Vec<bool> {
        (0..self.n).map(|q| self.x_bit(q)).collect()
    }

    pub fn z_bits(&self) -> Vec<bool> {
        (0..self.n).map(|q| self.z_bit(q)).collect()
    }

    pub fn kind(&self, q: usize) -> PauliKind {
        PauliKind::from_bits(self.x_bit(q), self.z_bit(q))
    }

    /// Replaces the factor on qubit `q` by the Hermitian letter `kind`, keeping the
    /// coefficient of the other factors.
    pub fn set_kind(&mut self, q: usize, kind: PauliKind) {
        let old_y = self.x_bit(q) && self.z_bit(q);
        let (x, z) = kind.bits();
        set_bit(&mut self.x, q, x);
        set_bit(&mut self.z, q, z);
        let new_y = x && z;
        self.phase = (self.phase + new_y as u8 + 3 * old_y as u8) & 3;
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x_bit(q) || self.z_bit(q)).collect()
    }

    pub fn y_count(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// True when the operator is Hermitian (coefficient ±1 relative to the Hermitian letters).
    pub fn is_hermitian(&self) -> bool {
        (self.phase as usize + self.y_count()) % 2 == 0
    }

    /// Coefficient exponent relative to the tensor product of Hermitian letters.
    pub fn letter_phase(&self) -> u8 {
        ((self.phase as usize + 4 - self.y_count() % 4) % 4) as u8
    }

    /// Same bits with phase chosen so that the coefficient in front of the letters is +1.
    pub fn hermitian_part(&self) -> Self {
        let mut p = self.clone();
        p.phase = (self.y_count() % 4) as u8;
        p
    }

    fn check(&self, other: &Self) -> Result<(), PauliError> {
        if self.n != other.n {
            Err(PauliError::SizeMismatch(self.n, other.n))
        } else {
            Ok(())
        }
    }

    /// `self · other` with exact phase.
    pub fn try_mul(&self, other: &Self) -> Result<Self, PauliError> {
        self.check(other)?;
        let mut out = self.clone();
        out.mul_assign_right(other);
        Ok(out)
    }

    /// In place `self ← self · other`. Panics on size mismatch.
    pub fn mul_assign_right(&mut self, other: &Self) {
        assert_eq!(self.n, other.n, "Pauli size mismatch");
        let mut cross = 0u32;
        for w in 0..self.x.len() {
            cross += (self.z[w] & other.x[w]).count_ones();
            self.x[w] ^= other.x[w];
            self.z[w] ^= other.z[w];
        }
        self.phase = ((self.phase as u32 + other.phase as u32 + 2 * cross) & 3) as u8;
    }

    /// In place `self ← other · self`.
    pub fn mul_assign_left(&mut self, other: &Self) {
        let mut out = other.clone();
        out.mul_assign_right(self);
        *self = out;
    }

    /// True iff the two operators commute.
    pub fn commutes_with(&self, other: &Self) -> bool {
        assert_eq!(self.n, other.n, "Pauli size mismatch");
        let mut s = 0u32;
        for w in 0..self.x.len() {
            s += (self.x[w] & other.z[w]).count_ones() + (self.z[w] & other.x[w]).count_ones();
        }
        s % 2 == 0
    }

    /// c(p, q): +1 if pq = qp, -1 if pq = -qp.
    pub fn commutation_sign(&self, other: &Self) -> Result<i8, PauliError> {
        self.check(other)?;
        Ok(if self.commutes_with(other) { 1 } else { -1 })
    }

    /// y(p): the sign with p^T = y(p)·p, i.e. -1 iff p has an odd number of Y factors.
    pub fn transpose_sign(&self) -> i8 {
        if self.y_count() % 2 == 1 {
            -1
        } else {
            1
        }
    }

    /// Adjoint `p*`.
    pub fn adjoint(&self) -> Self {
        let mut p = self.clone();
        // (i^k X^x Z^z)* = (-i)^k (-1)^{x.z} X^x Z^z
        let k = (4 - self.phase as usize) % 4 + 2 * (self.y_count() % 2);
        p.phase = (k % 4) as u8;
        p
    }

    /// Tensor product `self ⊗ other` (other's qubits appended after self's).
    pub fn tensor(&self, other: &Self) -> Self {
        let n = self.n + other.n;
        let mut p = PauliOperator::identity(n);
        for q in 0..self.n {
            set_bit(&mut p.x, q, self.x_bit(q));
            set_bit(&mut p.z, q, self.z_bit(q));
        }
        for q in 0..other.n {
            set_bit(&mut p.x, self.n + q, other.x_bit(q));
            set_bit(&mut p.z, self.n + q, other.z_bit(q));
        }
        p.phase = (self.phase + other.phase) & 3;
        p
    }

    /// Restriction to `qubits` (in the given order). The phase is carried as the
    /// letter coefficient, so restricting a tensor product keeps its letters.
    pub fn restrict(&self, qubits: &[usize]) -> Self {
        let mut p = PauliOperator::identity(qubits.len());
        for (i, &q) in qubits.iter().enumerate() {
            p.set_kind(i, self.kind(q));
        }
        p
    }

    /// Restriction keeping the full coefficient of `self`.
    pub fn restrict_with_phase(&self, qubits: &[usize]) -> Self {
        let mut p = self.restrict(qubits);
        let letters = self.letter_phase();
        p.phase = (p.phase + letters) & 3;
        p
    }

    /// Places `self` on `qubits` of an `n`-qubit register (identity elsewhere).
    pub fn embed(&self, n: usize, qubits: &[usize]) -> Self {
        assert_eq!(qubits.len(), self.n);
        let mut p = PauliOperator::identity(n);
        for (i, &q) in qubits.iter().enumerate() {
            set_bit(&mut p.x, q, self.x_bit(i));
            set_bit(&mut p.z, q, self.z_bit(i));
        }
        p.phase = self.phase;
        p
    }

    /// Overwrites the letters on `qubits` with those of `part` and multiplies the
    /// coefficient by `part`'s letter coefficient.
    pub fn overwrite(&mut self, qubits: &[usize], part: &Self) {
        for (i, &q) in qubits.iter().enumerate() {
            self.set_kind(q, part.kind(i));
        }
        self.phase = (self.phase + part.letter_phase()) & 3;
    }

    /// Dense matrix in the little-endian basis (qubit 0 is the least significant bit).
    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        let xm = self.x_mask();
        let zm = self.z_mask();
        for j in 0..dim {
            let sign = if (zm & j as u64).count_ones() % 2 == 1 { 2 } else { 0 };
            let i = j ^ xm as usize;
            m[(i, j)] = i_pow(self.phase + sign);
        }
        m
    }

    pub(crate) fn x_mask(&self) -> u64 {
        debug_assert!(self.n <= 64);
        self.x.first().copied().unwrap_or(0)
    }

    pub(crate) fn z_mask(&self) -> u64 {
        debug_assert!(self.n <= 64);
        self.z.first().copied().unwrap_or(0)
    }

    /// Forward conjugation `G·self·G*` by a Clifford gate.
    pub fn conjugate_forward_gate(&mut self, g: &Gate) {
        match *g {
            Gate::X(q) => {
                if self.z_bit(q) {
                    self.phase = (self.phase + 2) & 3;
                }
            }
            Gate::Z(q) => {
                if self.x_bit(q) {
                    self.phase = (self.phase + 2) & 3;
                }
            }
            Gate::Y(q) => {
                if self.x_bit(q) ^ self.z_bit(q) {
                    self.phase = (self.phase + 2) & 3;
                }
            }
            Gate::H(q) => {
                let (x, z) = (self.x_bit(q), self.z_bit(q));
                set_bit(&mut self.x, q, z);
                set_bit(&mut self.z, q, x);
                if x && z {
                    self.phase = (self.phase + 2) & 3;
                }
            }
            Gate::K(q) => {
                if self.x_bit(q) {
                    self.phase = (self.phase + 1) & 3;
                    flip_bit(&mut self.z, q);
                }
            }
            Gate::Cnot(c, t) => {
                if self.x_bit(c) {
                    flip_bit(&mut self.x, t);
                }
                if self.z_bit(t) {
                    flip_bit(&mut self.z, c);
                }
            }
            Gate::T(_) => panic!("T is not a Clifford gate"),
        }
    }

    /// Backward conjugation `G*·self·G` by a Clifford gate.
    pub fn conjugate_backward_gate(&mut self, g: &Gate) {
        match *g {
            Gate::K(q) => {
                if self.x_bit(q) {
                    self.phase = (self.phase + 3) & 3;
                    flip_bit(&mut self.z, q);
                }
            }
            _ => self.conjugate_forward_gate(g),
        }
    }

    /// Text form, e.g. `"+XIZ"`, `"-iYY"`.
    pub fn to_text(&self) -> String {
        let prefix = match self.letter_phase() {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        let mut s = String::from(prefix);
        for q in 0..self.n {
            s.push(self.kind(q).letter());
        }
        s
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({})", self.to_text())
    }
}

impl FromStr for PauliOperator {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (coef, rest) = if let Some(r) = t.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = t.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = t.strip_prefix('+') {
            (0, r)
        } else if let Some(r) = t.strip_prefix('-') {
            (2, r)
        } else {
            (0, t)
        };
        let mut kinds = Vec::with_capacity(rest.len());
        for ch in rest.chars() {
            kinds.push(match ch {
                'I' | '_' => PauliKind::I,
                'X' => PauliKind::X,
                'Y' => PauliKind::Y,
                'Z' => PauliKind::Z,
                _ => return Err(PauliError::Parse(s.to_string())),
            });
        }
        let mut p = PauliOperator::from_kinds(&kinds);
        p.phase = (p.phase + coef) & 3;
        Ok(p)
    }
}

impl Serialize for PauliOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for PauliOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl std::ops::Mul for &PauliOperator {
    type Output = PauliOperator;

    fn mul(self, rhs: &PauliOperator) -> PauliOperator {
        self.try_mul(rhs).expect("Pauli size mismatch")
    }
}

/// `a · b` with exact phase.
pub fn multiply_paulis(a: &PauliOperator, b: &PauliOperator) -> Result<PauliOperator, PauliError> {
    a.try_mul(b)
}

/// Gates of the universal set. `K = diag(1, i)`, `T = diag(1, e^{iπ/4})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    X(usize),
    Y(usize),
    Z(usize),
    H(usize),
    K(usize),
    T(usize),
    Cnot(usize, usize),
}

impl Gate {
    pub fn is_clifford(&self) -> bool {
        !matches!(self, Gate::T(_))
    }

    pub fn is_pauli(&self) -> bool {
        matches!(self, Gate::X(_) | Gate::Y(_) | Gate::Z(_))
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::H(q) | Gate::K(q) | Gate::T(q) => vec![q],
            Gate::Cnot(c, t) => vec![c, t],
        }
    }

    /// Same gate with qubit indices mapped through `f`.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::X(q) => Gate::X(f(q)),
            Gate::Y(q) => Gate::Y(f(q)),
            Gate::Z(q) => Gate::Z(f(q)),
            Gate::H(q) => Gate::H(f(q)),
            Gate::K(q) => Gate::K(f(q)),
            Gate::T(q) => Gate::T(f(q)),
            Gate::Cnot(c, t) => Gate::Cnot(f(c), f(t)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::X(_) => "X",
            Gate::Y(_) => "Y",
            Gate::Z(_) => "Z",
            Gate::H(_) => "H",
            Gate::K(_) => "K",
            Gate::T(_) => "T",
            Gate::Cnot(..) => "CNOT",
        }
    }

    /// 2x2 (or 4x4 for CNOT, control = low bit) matrix of the gate.
    pub fn local_matrix(&self) -> DMatrix<C64> {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Gate::X(_) => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
            Gate::Y(_) => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
            Gate::Z(_) => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
            Gate::H(_) => {
                let h = C64::new(s, 0.0);
                DMatrix::from_row_slice(2, 2, &[h, h, h, -h])
            }
            Gate::K(_) => DMatrix::from_row_slice(2, 2, &[l, o, o, i]),
            Gate::T(_) => DMatrix::from_row_slice(2, 2, &[l, o, o, C64::new(s, s)]),
            Gate::Cnot(..) => {
                let mut m = DMatrix::<C64>::zeros(4, 4);
                // basis index = control + 2*target
                m[(0, 0)] = l;
                m[(3, 1)] = l;
                m[(2, 2)] = l;
                m[(1, 3)] = l;
                m
            }
        }
    }
}

/// Dense unitary of a gate list on `n` qubits (first gate applied first).
pub fn circuit_unitary(n: usize, gates: &[Gate]) -> DMatrix<C64> {
    let dim = 1usize << n;
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for g in gates {
        let gm = embed_gate(n, g);
        u = gm * u;
    }
    u
}

/// Dense matrix of a single gate embedded in `n` qubits.
pub fn embed_gate(n: usize, g: &Gate) -> DMatrix<C64> {
    let dim = 1usize << n;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    match *g {
        Gate::Cnot(c, t) => {
            for j in 0..dim {
                let i = if (j >> c) & 1 == 1 { j ^ (1 << t) } else { j };
                m[(i, j)] = C64::new(1.0, 0.0);
            }
        }
        _ => {
            let q = g.qubits()[0];
            let lm = g.local_matrix();
            for j in 0..dim {
                let b = (j >> q) & 1;
                for a in 0..2 {
                    let v = lm[(a, b)];
                    if v != C64::new(0.0, 0.0) {
                        let i = (j & !(1 << q)) | (a << q);
                        m[(i, j)] += v;
                    }
                }
            }
        }
    }
    m
}

/// Clifford unitary described by its conjugation action on the Pauli generators.
#[derive(Clone, Debug)]
pub struct CliffordUnitary {
    n: usize,
    /// `C*·X_j·C` for j in 0..n.
    back_x: Vec<PauliOperator>,
    /// `C*·Z_j·C`.
    back_z: Vec<PauliOperator>,
    /// `C·X_j·C*`.
    fwd_x: Vec<PauliOperator>,
    /// `C·Z_j·C*`.
    fwd_z: Vec<PauliOperator>,
    gates: Option<Vec<Gate>>,
}

impl CliffordUnitary {
    pub fn identity(n: usize) -> Self {
        let xs: Vec<_> = (0..n).map(|j| PauliOperator::single(n, j, PauliKind::X)).collect();
        let zs: Vec<_> = (0..n).map(|j| PauliOperator::single(n, j, PauliKind::Z)).collect();
        CliffordUnitary { n, back_x: xs.clone(), back_z: zs.clone(), fwd_x: xs, fwd_z: zs, gates: Some(Vec::new()) }
    }

    /// Clifford for the gate list (first gate applied first).
    pub fn from_gates(n: usize, gates: &[Gate]) -> Result<Self, PauliError> {
        let mut c = CliffordUnitary::identity(n);
        for g in gates {
            for q in g.qubits() {
                if q >= n {
                    return Err(PauliError::OutOfRange(q, n));
                }
            }
            assert!(g.is_clifford(), "T is not a Clifford gate");
        }
        for j in 0..n {
            for p in [&mut c.fwd_x[j], &mut c.fwd_z[j]] {
                for g in gates {
                    p.conjugate_forward_gate(g);
                }
            }
            for p in [&mut c.back_x[j], &mut c.back_z[j]] {
                for g in gates.iter().rev() {
                    p.conjugate_backward_gate(g);
                }
            }
        }
        c.gates = Some(gates.to_vec());
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> Option<&[Gate]> {
        self.gates.as_deref()
    }

    fn apply_table(xs: &[PauliOperator], zs: &[PauliOperator], q: &PauliOperator) -> PauliOperator {
        let n = q.n;
        let mut out = PauliOperator::identity(n);
        out.phase = q.phase;
        for j in 0..n {
            if q.x_bit(j) {
                out.mul_assign_right(&xs[j]);
            }
        }
        for j in 0..n {
            if q.z_bit(j) {
                out.mul_assign_right(&zs[j]);
            }
        }
        out
    }

    /// `C*·q·C`, the unique q' with `q·C = C·q'`.
    pub fn conjugate(&self, q: &PauliOperator) -> Result<PauliOperator, PauliError> {
        if q.n != self.n {
            return Err(PauliError::SizeMismatch(self.n, q.n));
        }
        Ok(Self::apply_table(&self.back_x, &self.back_z, q))
    }

    /// `C·q·C*`.
    pub fn conjugate_forward(&self, q: &PauliOperator) -> Result<PauliOperator, PauliError> {
        if q.n != self.n {
            return Err(PauliError::SizeMismatch(self.n, q.n));
        }
        Ok(Self::apply_table(&self.fwd_x, &self.fwd_z, q))
    }

    /// `self` followed by `next` (unitary `next·self`).
    pub fn then(&self, next: &CliffordUnitary) -> CliffordUnitary {
        assert_eq!(self.n, next.n);
        // (N C)* q (N C) = C* (N* q N) C
        let back_x = next.back_x.iter().map(|p| Self::apply_table(&self.back_x, &self.back_z, p)).collect();
        let back_z = next.back_z.iter().map(|p| Self::apply_table(&self.back_x, &self.back_z, p)).collect();
        let fwd_x = self.fwd_x.iter().map(|p| Self::apply_table(&next.fwd_x, &next.fwd_z, p)).collect();
        let fwd_z = self.fwd_z.iter().map(|p| Self::apply_table(&next.fwd_x, &next.fwd_z, p)).collect();
        let gates = match (&self.gates, &next.gates) {
            (Some(a), Some(b)) => Some(a.iter().chain(b.iter()).copied().collect()),
            _ => None,
        };
        CliffordUnitary { n: self.n, back_x, back_z, fwd_x, fwd_z, gates }
    }

    pub fn inverse(&self) -> CliffordUnitary {
        let gates = self.gates.as_deref().map(inverse_gates);
        CliffordUnitary {
            n: self.n,
            back_x: self.fwd_x.clone(),
            back_z: self.fwd_z.clone(),
            fwd_x: self.back_x.clone(),
            fwd_z: self.back_z.clone(),
            gates,
        }
    }

    /// Checks that the generator images satisfy the Pauli commutation relations.
    pub fn is_symplectic(&self) -> bool {
        for table in [(&self.back_x, &self.back_z), (&self.fwd_x, &self.fwd_z)] {
            let (xs, zs) = table;
            for i in 0..self.n {
                if !xs[i].is_hermitian() || !zs[i].is_hermitian() {
                    return false;
                }
                for j in 0..self.n {
                    if !xs[i].commutes_with(&xs[j]) || !zs[i].commutes_with(&zs[j]) {
                        return false;
                    }
                    if xs[i].commutes_with(&zs[j]) != (i != j) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// 2n x 2n binary matrix: column j (resp. n+j) holds the (x|z) bits of `C*X_jC` (resp. `C*Z_jC`).
    pub fn symplectic_matrix(&self) -> Vec<Vec<bool>> {
        let n = self.n;
        let mut m = vec![vec![false; 2 * n]; 2 * n];
        for j in 0..n {
            for q in 0..n {
                m[q][j] = self.back_x[j].x_bit(q);
                m[n + q][j] = self.back_x[j].z_bit(q);
                m[q][n + j] = self.back_z[j].x_bit(q);
                m[n + q][n + j] = self.back_z[j].z_bit(q);
            }
        }
        m
    }
}

/// Gate list of the inverse circuit. `K* = Z·K`, `T* = Z·K·T`.
pub fn inverse_gates(gates: &[Gate]) -> Vec<Gate> {
    let mut inv = Vec::with_capacity(gates.len());
    for gate in gates.iter().rev() {
        match *gate {
            Gate::K(q) => inv.extend([Gate::K(q), Gate::Z(q)]),
            Gate::T(q) => inv.extend([Gate::T(q), Gate::K(q), Gate::Z(q)]),
            other => inv.push(other),
        }
    }
    inv
}

/// Free function form of [`CliffordUnitary::conjugate`]: returns `C*·q·C`.
pub fn conjugate_pauli_by_clifford(c: &CliffordUnitary, q: &PauliOperator) -> Result<PauliOperator, PauliError> {
    c.conjugate(q)
}

/// Bijection on `{0..size-1}`; `apply(i)` is the image of `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn identity(size: usize) -> Self {
        Permutation { mapping: (0..size).collect() }
    }

    pub fn new(mapping: Vec<usize>) -> Result<Self, PauliError> {
        let mut seen = vec![false; mapping.len()];
        for &m in &mapping {
            if m >= mapping.len() || seen[m] {
                return Err(PauliError::NotBijection);
            }
            seen[m] = true;
        }
        Ok(Permutation { mapping })
    }

    /// Uniform permutation by Fisher–Yates.
    pub fn random<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..size).collect();
        for i in (1..size).rev() {
            let j = rng.gen_range(0..=i);
            mapping.swap(i, j);
        }
        Permutation { mapping }
    }

    pub fn size(&self) -> usize {
        self.mapping.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Permutation { mapping: inv }
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.size(), other.size());
        Permutation { mapping: other.mapping.iter().map(|&i| self.mapping[i]).collect() }
    }

    /// All permutations of `size` elements in lexicographic order.
    pub fn all(size: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..size).collect();
        loop {
            out.push(Permutation { mapping: cur.clone() });
            // next lexicographic permutation
            let Some(i) = (0..size.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
                break;
            };
            let j = (i + 1..size).rev().find(|&j| cur[j] > cur[i]).unwrap();
            cur.swap(i, j);
            cur[i + 1..].reverse();
        }
        out
    }
}

/// Index of a Hermitian Pauli in base-4 order (qubit 0 is the least significant digit,
/// digits I=0, X=1, Y=2, Z=3).
pub fn pauli_from_index(n: usize, mut idx: usize) -> PauliOperator {
    let mut kinds = Vec::with_capacity(n);
    for _ in 0..n {
        kinds.push(PauliKind::ALL[idx % 4]);
        idx /= 4;
    }
    PauliOperator::from_kinds(&kinds)
}

/// Pauli coefficients `α_Q = tr(Q*·m)/2^n` over the Hermitian Pauli basis.
pub fn pauli_decompose(m: &DMatrix<C64>) -> Result<BTreeMap<PauliOperator, C64>, PauliError> {
    let dim = m.nrows();
    if dim == 0 || !dim.is_power_of_two() || m.ncols() != dim {
        return Err(PauliError::Dimension(dim));
    }
    let n = dim.trailing_zeros() as usize;
    let mut out = BTreeMap::new();
    for idx in 0..(1usize << (2 * n)) {
        let q = pauli_from_index(n, idx);
        let xm = q.x_mask() as usize;
        let zm = q.z_mask();
        // tr(Q* m) = Σ_j conj(Q_{ij}) m_{ij} with i = j ^ x
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..dim {
            let sign = if (zm & j as u64).count_ones() % 2 == 1 { 2 } else { 0 };
            let qij = i_pow(q.phase + sign);
            acc += qij.conj() * m[(j ^ xm, j)];
        }
        out.insert(q, acc / dim as f64);
    }
    Ok(out)
}

/// Σ α_Q Q as a dense matrix.
pub fn pauli_reconstruct(n: usize, coeffs: &BTreeMap<PauliOperator, C64>) -> DMatrix<C64> {
    let dim = 1usize << n;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (q, a) in coeffs {
        m += q.to_dense() * *a;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
        (a - b).iter().all(|v| v.norm() < tol)
    }

    fn all_paulis(n: usize) -> Vec<PauliOperator> {
        let mut v = Vec::new();
        for idx in 0..(1usize << (2 * n)) {
            for k in 0..4 {
                let mut p = pauli_from_index(n, idx);
                p.set_phase_exp(p.phase_exp() + k);
                v.push(p);
            }
        }
        v
    }

    #[test]
    fn x_times_z_is_minus_i_y() {
        let x: PauliOperator = "X".parse().unwrap();
        let z: PauliOperator = "Z".parse().unwrap();
        assert_eq!((&x * &z).to_text(), "-iY");
    }

    #[test]
    fn multiplication_matches_dense_on_two_qubits() {
        let ps = all_paulis(2);
        for a in ps.iter().step_by(3) {
            for b in ps.iter().step_by(5) {
                let prod = a * b;
                assert!(close(&prod.to_dense(), &(a.to_dense() * b.to_dense()), 1e-12), "{a} {b}");
            }
        }
    }

    #[test]
    fn commutation_matches_dense_exhaustively() {
        let ps: Vec<_> = (0..16).map(|i| pauli_from_index(2, i)).collect();
        for a in &ps {
            for b in &ps {
                let ab = a.to_dense() * b.to_dense();
                let ba = b.to_dense() * a.to_dense();
                let expect = if close(&ab, &ba, 1e-12) { 1 } else { -1 };
                assert_eq!(a.commutation_sign(b).unwrap(), expect);
            }
        }
    }

    #[test]
    fn transpose_sign_matches_dense_on_three_qubits() {
        for idx in 0..64 {
            let p = pauli_from_index(3, idx);
            let d = p.to_dense();
            let t = d.transpose();
            let expect = if close(&t, &d, 1e-12) { 1 } else { -1 };
            assert_eq!(p.transpose_sign(), expect, "{p}");
        }
    }

    #[test]
    fn text_round_trip() {
        for s in ["+XIZ", "-iYY", "+iX", "-Z", "+I"] {
            let p: PauliOperator = s.parse().unwrap();
            assert_eq!(p.to_text(), s);
        }
        assert!("+XQ".parse::<PauliOperator>().is_err());
    }

    #[test]
    fn hadamard_conjugates_x_to_z() {
        let c = CliffordUnitary::from_gates(1, &[Gate::H(0)]).unwrap();
        let x: PauliOperator = "X".parse().unwrap();
        assert_eq!(c.conjugate(&x).unwrap().to_text(), "+Z");
    }

    #[test]
    fn conjugation_matches_dense_for_random_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let gates: Vec<Gate> = (0..12)
                .map(|_| match rng.gen_range(0..7) {
                    0 => Gate::X(rng.gen_range(0..3)),
                    1 => Gate::Y(rng.gen_range(0..3)),
                    2 => Gate::Z(rng.gen_range(0..3)),
                    3 => Gate::H(rng.gen_range(0..3)),
                    4 => Gate::K(rng.gen_range(0..3)),
                    _ => {
                        let c = rng.gen_range(0..3);
                        Gate::Cnot(c, (c + rng.gen_range(1..3)) % 3)
                    }
                })
                .collect();
            let c = CliffordUnitary::from_gates(3, &gates).unwrap();
            assert!(c.is_symplectic());
            let u = circuit_unitary(3, &gates);
            let q = PauliOperator::random(3, &mut rng);
            let back = c.conjugate(&q).unwrap();
            assert!(close(&back.to_dense(), &(u.adjoint() * q.to_dense() * &u), 1e-10));
            let fwd = c.conjugate_forward(&q).unwrap();
            assert!(close(&fwd.to_dense(), &(&u * q.to_dense() * u.adjoint()), 1e-10));
            let inv = c.inverse();
            assert_eq!(inv.conjugate(&q).unwrap(), fwd);
        }
    }

    #[test]
    fn composition_order() {
        let c1 = CliffordUnitary::from_gates(2, &[Gate::H(0), Gate::Cnot(0, 1)]).unwrap();
        let c2 = CliffordUnitary::from_gates(2, &[Gate::K(1), Gate::H(1)]).unwrap();
        let both = c1.then(&c2);
        let direct = CliffordUnitary::from_gates(2, &[Gate::H(0), Gate::Cnot(0, 1), Gate::K(1), Gate::H(1)]).unwrap();
        for idx in 0..16 {
            let q = pauli_from_index(2, idx);
            assert_eq!(both.conjugate(&q).unwrap(), direct.conjugate(&q).unwrap());
            // (C2 C1)* q (C2 C1) = C1*(C2* q C2)C1
            let stepwise = c1.conjugate(&c2.conjugate(&q).unwrap()).unwrap();
            assert_eq!(both.conjugate(&q).unwrap(), stepwise);
        }
    }

    #[test]
    fn decompose_t_gate() {
        let t = Gate::T(0).local_matrix();
        let a = pauli_decompose(&t).unwrap();
        let i: PauliOperator = "I".parse().unwrap();
        let z: PauliOperator = "Z".parse().unwrap();
        let c = (std::f64::consts::PI / 8.0).cos();
        let s = (std::f64::consts::PI / 8.0).sin();
        assert!((a[&i].norm_sqr() - c * c).abs() < 1e-12);
        assert!((a[&z].norm_sqr() - s * s).abs() < 1e-12);
        // α_I = cos(π/8) e^{iπ/8}
        let expect = C64::from_polar(c, std::f64::consts::PI / 8.0);
        assert!((a[&i] - expect).norm() < 1e-12);
        let total: f64 = a.values().map(|v| v.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decompose_x() {
        let a = pauli_decompose(&Gate::X(0).local_matrix()).unwrap();
        for (q, v) in &a {
            let expect = if q.to_text() == "+X" { 1.0 } else { 0.0 };
            assert!((v - C64::new(expect, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn permutations_enumerate() {
        let all = Permutation::all(3);
        assert_eq!(all.len(), 6);
        let p = &all[3];
        assert_eq!(p.compose(&p.inverse()), Permutation::identity(3));
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliOperator> {
        (proptest::collection::vec(0usize..4, n), 0u8..4).prop_map(|(ks, ph)| {
            let kinds: Vec<_> = ks.into_iter().map(|k| PauliKind::ALL[k]).collect();
            let mut p = PauliOperator::from_kinds(&kinds);
            p.set_phase_exp(p.phase_exp() + ph);
            p
        })
    }

    fn arb_unitary(n: usize) -> impl Strategy<Value = DMatrix<C64>> {
        let dim = 1usize << n;
        proptest::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |v| {
            let m = DMatrix::from_fn(dim, dim, |i, j| C64::new(v[2 * (i * dim + j)], v[2 * (i * dim + j) + 1]));
            m.qr().q()
        })
    }

    proptest! {
        #[test]
        fn multiplication_is_associative(a in arb_pauli(5), b in arb_pauli(5), c in arb_pauli(5)) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        }

        #[test]
        fn squares_are_plus_minus_identity(a in arb_pauli(6)) {
            let sq = &a * &a;
            prop_assert!(sq.is_identity_up_to_phase());
            prop_assert!(sq.phase_exp() % 2 == 0);
        }

        #[test]
        fn commutation_is_symmetric(a in arb_pauli(8), b in arb_pauli(8)) {
            prop_assert_eq!(a.commutation_sign(&b).unwrap(), b.commutation_sign(&a).unwrap());
        }

        #[test]
        fn transpose_sign_is_multiplicative(a in arb_pauli(3), b in arb_pauli(4)) {
            prop_assert_eq!(a.tensor(&b).transpose_sign(), a.transpose_sign() * b.transpose_sign());
        }

        #[test]
        fn text_form_round_trips(a in arb_pauli(7)) {
            let back: PauliOperator = a.to_text().parse().unwrap();
            prop_assert_eq!(back, a);
        }

        #[test]
        fn decompose_reconstruct_identity(u in arb_unitary(2)) {
            let coeffs = pauli_decompose(&u).unwrap();
            let r = pauli_reconstruct(2, &coeffs);
            prop_assert!(close(&r, &u, 1e-12));
            let total: f64 = coeffs.values().map(|v| v.norm_sqr()).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }
}
