//! State backends sharing one simulation contract.

pub mod stabsum;
pub mod statevector;
pub mod tableau;

use std::collections::BTreeSet;
use std::ops::Range;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{Gate, PauliOperator, C64};

pub use stabsum::StabilizerSum;
pub use statevector::StateVector;
pub use tableau::StabilizerTableau;

/// Largest register converted to a dense vector for `density_of`.
pub const DENSE_CONVERSION_QUBITS: usize = 16;
/// Largest keep set for the Pauli-expansion route of `density_of`.
pub const MAX_EXPANSION_KEEP: usize = 8;
pub const MAX_KEEP: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit {0} out of range for {1} qubits")]
    OutOfRange(usize, usize),
    #[error("duplicate gate targets")]
    DuplicateTargets,
    #[error("{backend} backend supports at most {limit} qubits, requested {n}")]
    Capacity { backend: &'static str, n: usize, limit: usize },
    #[error("stabilizer rank {rank} exceeds budget {limit}")]
    RankBudget { rank: usize, limit: usize },
    #[error("operation needs a non-Clifford capable backend")]
    NotClifford,
    #[error("keep set of {0} qubits is too large for a dense density matrix")]
    KeepTooLarge(usize),
    #[error("forced outcome has probability zero")]
    ZeroProbability,
    #[error("operator size {0} does not match state size {1}")]
    Size(usize, usize),
    #[error("amplitude vector length {0} is not a power of two")]
    Dimension(usize),
    #[error("tableau rows are inconsistent")]
    Inconsistent,
    #[error("malformed state fixture: {0}")]
    Fixture(String),
}

/// How a measurement chooses its outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pick {
    /// Born-rule sample from a uniform draw in [0, 1): outcome 1 iff `u < p1`.
    Random(f64),
    /// Postselect on the given bit.
    Forced(bool),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleMeasurement {
    pub bit: bool,
    pub probability: f64,
}

/// Outcome of measuring several qubits; the posterior is the mutated state.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOutcome {
    pub bits: Vec<bool>,
    pub probability: f64,
}

/// The simulation contract every backend implements.
pub trait Backend {
    fn n(&self) -> usize;
    fn apply_gate(&mut self, g: &Gate) -> Result<(), SimError>;
    /// Applies a Pauli operator; its global phase is dropped on stabilizer backends.
    fn apply_pauli(&mut self, p: &PauliOperator) -> Result<(), SimError>;
    /// `(αI + βR)` followed by renormalization.
    fn apply_combination(&mut self, alpha: C64, beta: C64, r: &PauliOperator) -> Result<(), SimError>;
    fn measure(&mut self, q: usize, pick: Pick) -> Result<SingleMeasurement, SimError>;
    fn expectation(&self, p: &PauliOperator) -> Result<C64, SimError>;
    fn density_of(&self, keep: &[usize]) -> Result<DMatrix<C64>, SimError>;
    /// Appends `k` qubits in |0⟩ and returns their indices.
    fn append_qubits(&mut self, k: usize) -> Result<Range<usize>, SimError>;
    fn to_statevector(&self) -> Result<StateVector, SimError>;
}

pub(crate) fn check_gate(n: usize, g: &Gate) -> Result<(), SimError> {
    let qs = g.qubits();
    for &q in &qs {
        if q >= n {
            return Err(SimError::OutOfRange(q, n));
        }
    }
    if qs.len() == 2 && qs[0] == qs[1] {
        return Err(SimError::DuplicateTargets);
    }
    Ok(())
}

pub(crate) fn check_keep(n: usize, keep: &[usize]) -> Result<(), SimError> {
    if keep.len() > MAX_KEEP {
        return Err(SimError::KeepTooLarge(keep.len()));
    }
    let mut seen = BTreeSet::new();
    for &q in keep {
        if q >= n {
            return Err(SimError::OutOfRange(q, n));
        }
        if !seen.insert(q) {
            return Err(SimError::DuplicateTargets);
        }
    }
    Ok(())
}

/// Backend selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Sv,
    Tab,
    Sum,
}

/// Tagged union of the backend representations.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Sv(StateVector),
    Tab(StabilizerTableau),
    Sum(StabilizerSum),
}

macro_rules! dispatch {
    ($s:expr, $v:ident => $e:expr) => {
        match $s {
            QuantumState::Sv($v) => $e,
            QuantumState::Tab($v) => $e,
            QuantumState::Sum($v) => $e,
        }
    };
}

impl QuantumState {
    pub fn zero(kind: BackendKind, n: usize) -> Result<Self, SimError> {
        Ok(match kind {
            BackendKind::Sv => QuantumState::Sv(StateVector::zero(n)?),
            BackendKind::Tab => QuantumState::Tab(StabilizerTableau::zero(n)?),
            BackendKind::Sum => QuantumState::Sum(StabilizerSum::zero(n)?),
        })
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            QuantumState::Sv(_) => BackendKind::Sv,
            QuantumState::Tab(_) => BackendKind::Tab,
            QuantumState::Sum(_) => BackendKind::Sum,
        }
    }
}

impl Backend for QuantumState {
    fn n(&self) -> usize {
        dispatch!(self, s => s.n())
    }
    fn apply_gate(&mut self, g: &Gate) -> Result<(), SimError> {
        dispatch!(self, s => s.apply_gate(g))
    }
    fn apply_pauli(&mut self, p: &PauliOperator) -> Result<(), SimError> {
        dispatch!(self, s => s.apply_pauli(p))
    }
    fn apply_combination(&mut self, alpha: C64, beta: C64, r: &PauliOperator) -> Result<(), SimError> {
        dispatch!(self, s => s.apply_combination(alpha, beta, r))
    }
    fn measure(&mut self, q: usize, pick: Pick) -> Result<SingleMeasurement, SimError> {
        dispatch!(self, s => s.measure(q, pick))
    }
    fn expectation(&self, p: &PauliOperator) -> Result<C64, SimError> {
        dispatch!(self, s => s.expectation(p))
    }
    fn density_of(&self, keep: &[usize]) -> Result<DMatrix<C64>, SimError> {
        dispatch!(self, s => s.density_of(keep))
    }
    fn append_qubits(&mut self, k: usize) -> Result<Range<usize>, SimError> {
        dispatch!(self, s => s.append_qubits(k))
    }
    fn to_statevector(&self) -> Result<StateVector, SimError> {
        dispatch!(self, s => s.to_statevector())
    }
}

/// Applies `gate` after validating its targets.
pub fn apply_clifford_gate<B: Backend + ?Sized>(state: &mut B, gate: &Gate) -> Result<(), SimError> {
    if !gate.is_clifford() {
        return Err(SimError::NotClifford);
    }
    state.apply_gate(gate)
}

/// Measures `targets` in order, drawing one uniform per target.
pub fn measure_computational<B: Backend + ?Sized, R: Rng + ?Sized>(
    state: &mut B,
    targets: &[usize],
    rng: &mut R,
) -> Result<MeasurementOutcome, SimError> {
    let mut bits = Vec::with_capacity(targets.len());
    let mut probability = 1.0;
    for &q in targets {
        let m = state.measure(q, Pick::Random(rng.gen::<f64>()))?;
        bits.push(m.bit);
        probability *= m.probability;
    }
    Ok(MeasurementOutcome { bits, probability })
}

/// Resource states consumed by the gate gadgets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MagicKind {
    /// `K|+⟩`, the +1 eigenstate of Y.
    K,
    /// `T|+⟩`.
    T,
    /// `(H⊗I)|Φ+⟩`, two qubits.
    H,
}

impl MagicKind {
    pub fn width(self) -> usize {
        match self {
            MagicKind::H => 2,
            _ => 1,
        }
    }

    /// Preparation circuit from |0…0⟩ on `qs`.
    pub fn preparation(self, qs: &[usize]) -> Vec<Gate> {
        match self {
            MagicKind::K => vec![Gate::H(qs[0]), Gate::K(qs[0])],
            MagicKind::T => vec![Gate::H(qs[0]), Gate::T(qs[0])],
            MagicKind::H => vec![Gate::H(qs[0]), Gate::Cnot(qs[0], qs[1]), Gate::H(qs[1])],
        }
    }
}

/// Appends and prepares a magic register, returning its qubits.
pub fn inject_magic<B: Backend + ?Sized>(state: &mut B, kind: MagicKind) -> Result<Vec<usize>, SimError> {
    let qs: Vec<usize> = state.append_qubits(kind.width())?.collect();
    for g in kind.preparation(&qs) {
        state.apply_gate(&g)?;
    }
    Ok(qs)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
enum Fixture {
    Sv { n: usize, amplitudes: Vec<[f64; 2]> },
    Tab { n: usize, destabilizers: Vec<PauliOperator>, stabilizers: Vec<PauliOperator> },
    Sum { n: usize, destabilizers: Vec<PauliOperator>, stabilizers: Vec<PauliOperator>, terms: Vec<(String, [f64; 2])> },
}

fn bits_to_string(b: &[u64], n: usize) -> String {
    (0..n).map(|i| if crate::pauli::get_bit(b, i) { '1' } else { '0' }).collect()
}

impl Serialize for QuantumState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let f = match self {
            QuantumState::Sv(v) => Fixture::Sv { n: v.n(), amplitudes: v.amplitudes().iter().map(|a| [a.re, a.im]).collect() },
            QuantumState::Tab(t) => Fixture::Tab {
                n: t.n(),
                destabilizers: t.destabilizers().to_vec(),
                stabilizers: t.stabilizers().to_vec(),
            },
            QuantumState::Sum(m) => Fixture::Sum {
                n: m.n(),
                destabilizers: m.tableau().destabilizers().to_vec(),
                stabilizers: m.tableau().stabilizers().to_vec(),
                terms: m.terms().map(|(b, c)| (bits_to_string(b, m.n()), [c.re, c.im])).collect(),
            },
        };
        f.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuantumState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let f = Fixture::deserialize(d)?;
        let bad = |e: SimError| D::Error::custom(e.to_string());
        Ok(match f {
            Fixture::Sv { n, amplitudes } => {
                let v = StateVector::from_amplitudes(amplitudes.iter().map(|a| C64::new(a[0], a[1])).collect()).map_err(bad)?;
                if v.n() != n {
                    return Err(D::Error::custom("n does not match amplitude count"));
                }
                QuantumState::Sv(v)
            }
            Fixture::Tab { destabilizers, stabilizers, .. } => {
                QuantumState::Tab(StabilizerTableau::from_rows(destabilizers, stabilizers).map_err(bad)?)
            }
            Fixture::Sum { n, destabilizers, stabilizers, terms } => {
                let tab = StabilizerTableau::from_rows(destabilizers, stabilizers).map_err(bad)?;
                let mut parsed = Vec::new();
                for (bits, c) in terms {
                    if bits.len() != n {
                        return Err(D::Error::custom("term key length mismatch"));
                    }
                    let mut w = vec![0u64; crate::pauli::words_for(n)];
                    for (i, ch) in bits.chars().enumerate() {
                        crate::pauli::set_bit(&mut w, i, ch == '1');
                    }
                    parsed.push((w, C64::new(c[0], c[1])));
                }
                QuantumState::Sum(StabilizerSum::from_parts(tab, parsed))
            }
        })
    }
}
