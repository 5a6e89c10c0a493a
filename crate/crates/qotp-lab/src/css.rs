//! CSS codes with one logical qubit: Steane, concatenation, encoders and decoding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{BitMatrix, BitVec};
use crate::pauli::{inverse_gates, CliffordUnitary, Gate, PauliOperator};
use crate::sim::{Backend, StateVector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("concatenation supports 1 or 2 levels, requested {0}")]
    Capability(usize),
    #[error("size mismatch: expected {expected}, got {got}")]
    Size { expected: usize, got: usize },
    #[error("parity checks are not orthogonal")]
    NotOrthogonal,
    #[error("logical operator is invalid for the checks")]
    BadLogical,
    #[error("malformed code descriptor: {0}")]
    Descriptor(String),
}

/// Steane parity checks; character `i` of each row is qubit `i`.
pub const HAMMING_ROWS: [&str; 3] = ["0001111", "0110011", "1010101"];

#[derive(Clone, Debug)]
pub struct CssCode {
    name: String,
    n: usize,
    distance: usize,
    /// Supports of the X-type stabilizer generators.
    hx: BitMatrix,
    /// Supports of the Z-type stabilizer generators.
    hz: BitMatrix,
    x_bar: BitVec,
    z_bar: BitVec,
    data_pos: usize,
    encoder: CliffordUnitary,
    x_syndrome_regs: Vec<usize>,
    z_syndrome_regs: Vec<usize>,
    self_dual: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    pub a: bool,
    pub s: BitVec,
}

impl DecodeResult {
    pub fn accept(&self) -> bool {
        self.s.is_zero()
    }
}

/// How a Pauli acts relative to the code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogicalClass {
    /// Zero syndrome, element of the stabilizer group up to phase.
    Trivial,
    /// Zero syndrome, nontrivial coset; carries the induced 1-qubit logical Pauli with phase.
    Logical(PauliOperator),
    /// Nonzero syndrome. `x_syndrome = hz·x(q)` flags X errors, `z_syndrome = hx·z(q)` flags Z errors.
    Detected { x_syndrome: BitVec, z_syndrome: BitVec },
}

/// JSON descriptor of a code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeDescriptor {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub hx: Vec<String>,
    pub hz: Vec<String>,
}

/// Gate list of an encoder from `hx` and a logical-X support.
///
/// Returns the gates and the data position. The X-stabilizer pivots are put in
/// `|+⟩` and fanned out over their rows; the data qubit is fanned out over a
/// representative of logical X that avoids the pivots.
fn encoder_gates(hx: &BitMatrix, x_bar: &BitVec) -> Result<(Vec<Gate>, usize), CodeError> {
    let (red, piv) = hx.rref();
    let mut xb = x_bar.clone();
    for (row, &p) in red.rows().iter().zip(&piv) {
        if xb.get(p) {
            xb.xor_assign(row);
        }
    }
    let d = xb.ones().into_iter().find(|j| !piv.contains(j)).ok_or(CodeError::BadLogical)?;
    let mut gates = Vec::new();
    for j in xb.ones() {
        if j != d {
            gates.push(Gate::Cnot(d, j));
        }
    }
    for &p in &piv {
        gates.push(Gate::H(p));
    }
    for (row, &p) in red.rows().iter().zip(&piv) {
        for j in row.ones() {
            if j != p {
                gates.push(Gate::Cnot(p, j));
            }
        }
    }
    Ok((gates, d))
}

impl CssCode {
    /// Code from explicit checks and logical supports, with the generic encoder.
    pub fn from_checks(name: &str, hx: BitMatrix, hz: BitMatrix, x_bar: BitVec, z_bar: BitVec, distance: usize) -> Result<Self, CodeError> {
        let n = hx.cols();
        let (gates, data_pos) = encoder_gates(&hx, &x_bar)?;
        Self::assemble(name, hx, hz, x_bar, z_bar, distance, gates, data_pos, n)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        name: &str,
        hx: BitMatrix,
        hz: BitMatrix,
        x_bar: BitVec,
        z_bar: BitVec,
        distance: usize,
        gates: Vec<Gate>,
        data_pos: usize,
        n: usize,
    ) -> Result<Self, CodeError> {
        if hz.cols() != n || x_bar.len() != n || z_bar.len() != n {
            return Err(CodeError::Size { expected: n, got: hz.cols() });
        }
        if !hx.mul_transpose(&hz).is_zero() {
            return Err(CodeError::NotOrthogonal);
        }
        if !hz.mul_vec(&x_bar).is_zero() || !hx.mul_vec(&z_bar).is_zero() || !x_bar.dot(&z_bar) {
            return Err(CodeError::BadLogical);
        }
        let encoder = CliffordUnitary::from_gates(n, &gates).expect("encoder gates in range");
        let mut x_syndrome_regs = Vec::new();
        let mut z_syndrome_regs = Vec::new();
        for j in (0..n).filter(|&j| j != data_pos) {
            let img = encoder.conjugate_forward(&PauliOperator::z_on(n, &[j])).expect("size");
            if img.x_bits().iter().any(|&b| b) {
                z_syndrome_regs.push(j);
            } else {
                x_syndrome_regs.push(j);
            }
        }
        let self_dual = hx.rank() == hz.rank() && hx.rows().iter().all(|r| hz.in_rowspace(r));
        Ok(CssCode {
            name: name.to_string(),
            n,
            distance,
            hx,
            hz,
            x_bar,
            z_bar,
            data_pos,
            encoder,
            x_syndrome_regs,
            z_syndrome_regs,
            self_dual,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn distance(&self) -> usize {
        self.distance
    }
    pub fn hx(&self) -> &BitMatrix {
        &self.hx
    }
    pub fn hz(&self) -> &BitMatrix {
        &self.hz
    }
    pub fn x_bar(&self) -> &BitVec {
        &self.x_bar
    }
    pub fn z_bar(&self) -> &BitVec {
        &self.z_bar
    }
    /// Qubit that carries the logical input of the encoder.
    pub fn data_pos(&self) -> usize {
        self.data_pos
    }
    pub fn encoder(&self) -> &CliffordUnitary {
        &self.encoder
    }
    pub fn encoder_gates(&self) -> &[Gate] {
        self.encoder.gates().expect("encoders keep their gate list")
    }
    /// Registers that detect X errors after decoding.
    pub fn x_syndrome_regs(&self) -> &[usize] {
        &self.x_syndrome_regs
    }
    /// Registers that detect Z errors after decoding.
    pub fn z_syndrome_regs(&self) -> &[usize] {
        &self.z_syndrome_regs
    }
    pub fn self_dual(&self) -> bool {
        self.self_dual
    }

    pub fn logical_x(&self) -> PauliOperator {
        PauliOperator::x_on(self.n, &self.x_bar.ones())
    }

    pub fn logical_z(&self) -> PauliOperator {
        PauliOperator::z_on(self.n, &self.z_bar.ones())
    }

    /// `Ȳ = i·X̄·Z̄`.
    pub fn logical_y(&self) -> PauliOperator {
        let mut y = &self.logical_x() * &self.logical_z();
        y.set_phase_exp(y.phase_exp() + 1);
        y
    }

    /// The code with X and Z roles exchanged.
    pub fn dual(&self) -> Result<CssCode, CodeError> {
        CssCode::from_checks(
            &format!("{}-dual", self.name),
            self.hz.clone(),
            self.hx.clone(),
            self.z_bar.clone(),
            self.x_bar.clone(),
            self.distance,
        )
    }

    /// `Decode_E`: `c ↦ (a, s)` with `c ⊕ s` in the codeword coset of `a`.
    pub fn classical_decode(&self, c: &BitVec) -> Result<DecodeResult, CodeError> {
        if c.len() != self.n {
            return Err(CodeError::Size { expected: self.n, got: c.len() });
        }
        let sigma = self.hz.mul_vec(c);
        let s = if sigma.is_zero() {
            BitVec::zeros(self.n)
        } else if let Some(j) = (0..self.n).find(|&j| self.hz.column(j) == sigma) {
            let mut e = BitVec::zeros(self.n);
            e.set(j, true);
            e
        } else {
            self.hz.solve(&sigma).expect("hz has full row rank on its image")
        };
        let a = self.z_bar.dot(&c.xor(&s));
        Ok(DecodeResult { a, s })
    }

    /// Classification of `q` relative to the code.
    pub fn logical_pauli_of(&self, q: &PauliOperator) -> Result<LogicalClass, CodeError> {
        if q.n() != self.n {
            return Err(CodeError::Size { expected: self.n, got: q.n() });
        }
        let x = BitVec::from_bools(&q.x_bits());
        let z = BitVec::from_bools(&q.z_bits());
        let x_syndrome = self.hz.mul_vec(&x);
        let z_syndrome = self.hx.mul_vec(&z);
        if !x_syndrome.is_zero() || !z_syndrome.is_zero() {
            return Ok(LogicalClass::Detected { x_syndrome, z_syndrome });
        }
        let lx = self.z_bar.dot(&x);
        let lz = self.x_bar.dot(&z);
        if !lx && !lz {
            return Ok(LogicalClass::Trivial);
        }
        let mut inv = PauliOperator::identity(self.n);
        if lz {
            inv.mul_assign_right(&self.logical_z());
        }
        if lx {
            inv.mul_assign_right(&self.logical_x());
        }
        let r = q * &inv;
        let logical = PauliOperator::from_bits(&[lx], &[lz], r.phase_exp()).expect("1 qubit");
        Ok(LogicalClass::Logical(logical))
    }

    /// X-part-only classification used for measured registers: Z components are ignored.
    pub fn x_only_class(&self, q: &PauliOperator) -> Result<LogicalClass, CodeError> {
        let x_part = PauliOperator::x_on(q.n(), &BitVec::from_bools(&q.x_bits()).ones());
        self.logical_pauli_of(&x_part)
    }

    pub fn descriptor(&self) -> CodeDescriptor {
        CodeDescriptor {
            name: self.name.clone(),
            n: self.n,
            d: self.distance,
            hx: self.hx.rows().iter().map(|r| r.to_string_bits()).collect(),
            hz: self.hz.rows().iter().map(|r| r.to_string_bits()).collect(),
        }
    }

    /// Rebuilds a code from its descriptor, taking `X^⊗n`, `Z^⊗n` as logicals.
    pub fn from_descriptor(d: &CodeDescriptor) -> Result<Self, CodeError> {
        let parse = |rows: &[String]| {
            BitMatrix::parse_rows(&rows.iter().map(|s| s.as_str()).collect::<Vec<_>>())
                .ok_or_else(|| CodeError::Descriptor("bad row".into()))
        };
        let hx = parse(&d.hx)?;
        let hz = parse(&d.hz)?;
        if hx.cols() != d.n {
            return Err(CodeError::Descriptor("row length differs from n".into()));
        }
        let ones = BitVec::from_bools(&vec![true; d.n]);
        CssCode::from_checks(&d.name, hx, hz, ones.clone(), ones, d.d)
    }
}

/// The [[7,1,3]] Steane code.
pub fn build_steane() -> CssCode {
    let h = BitMatrix::parse_rows(&HAMMING_ROWS).expect("static rows");
    let ones = BitVec::from_bools(&[true; 7]);
    CssCode::from_checks("steane", h.clone(), h, ones.clone(), ones, 3).expect("Steane is a valid CSS code")
}

/// `levels`-fold concatenation of `code` with itself (levels ∈ {1, 2}).
pub fn concatenate(code: &CssCode, levels: usize) -> Result<CssCode, CodeError> {
    match levels {
        1 => Ok(code.clone()),
        2 => {
            let m = code.n;
            let n = m * m;
            let block = |j: usize| (0..m).map(|i| j * m + i).collect::<Vec<_>>();
            let spread = |h: &BitMatrix, logical: &BitVec| {
                let mut rows = Vec::new();
                for j in 0..m {
                    rows.extend(h.spread_columns(n, &block(j)).rows().iter().cloned());
                }
                for r in h.rows() {
                    let mut v = BitVec::zeros(n);
                    for j in r.ones() {
                        for i in logical.ones() {
                            v.set(j * m + i, true);
                        }
                    }
                    rows.push(v);
                }
                BitMatrix::new(n, rows)
            };
            let hx = spread(&code.hx, &code.x_bar);
            let hz = spread(&code.hz, &code.z_bar);
            let lift = |l: &BitVec| {
                let mut v = BitVec::zeros(n);
                for j in l.ones() {
                    for i in l.ones() {
                        v.set(j * m + i, true);
                    }
                }
                v
            };
            let x_bar = lift(&code.x_bar);
            let z_bar = lift(&code.z_bar);
            let d_in = code.data_pos;
            let mut gates: Vec<Gate> = code.encoder_gates().iter().map(|g| g.remap(|q| q * m + d_in)).collect();
            for j in 0..m {
                gates.extend(code.encoder_gates().iter().map(|g| g.remap(|q| j * m + q)));
            }
            let data_pos = code.data_pos * m + d_in;
            CssCode::assemble(
                &format!("{}^2", code.name),
                hx,
                hz,
                x_bar,
                z_bar,
                code.distance * code.distance,
                gates,
                data_pos,
                n,
            )
        }
        other => Err(CodeError::Capability(other)),
    }
}

/// Base code named in configs: `"steane"` (levels 1 or 2) or `"toy"` (1 qubit, d = 1).
pub fn code_by_name(name: &str, levels: usize) -> Result<CssCode, CodeError> {
    match name {
        "steane" => concatenate(&build_steane(), levels),
        "toy" => Ok(toy_code()),
        other => Err(CodeError::Descriptor(format!("unknown base code {other:?}"))),
    }
}

/// Trivial one-qubit code (no checks, distance 1).
pub fn toy_code() -> CssCode {
    let empty = BitMatrix::new(1, vec![]);
    let one = BitVec::from_bools(&[true]);
    CssCode::from_checks("toy", empty.clone(), empty, one.clone(), one, 1).expect("identity code")
}

/// Index of a measurement result in [`measure_then_decode`] and [`decode_then_measure`]:
/// 0 for reject, `1 + a` for accept with logical bit `a`.
fn outcome_index(a: bool, accept: bool) -> usize {
    if accept {
        1 + a as usize
    } else {
        0
    }
}

/// Law of the measurement result (reject, or accept with bit `a`) from measuring every
/// qubit of `state` and running [`CssCode::classical_decode`].
pub fn measure_then_decode(code: &CssCode, state: &StateVector) -> Result<[f64; 3], CodeError> {
    if state.n() != code.n() {
        return Err(CodeError::Size { expected: code.n(), got: state.n() });
    }
    let mut out = [0.0; 3];
    for (c, amp) in state.amplitudes().iter().enumerate() {
        let p = amp.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let bits: Vec<bool> = (0..code.n()).map(|q| c >> q & 1 == 1).collect();
        let r = code.classical_decode(&BitVec::from_bools(&bits))?;
        out[outcome_index(r.a, r.accept())] += p;
    }
    Ok(out)
}

/// The same law from applying the inverse encoder, then measuring the data register and the
/// X-syndrome registers. The Z-syndrome registers are discarded.
pub fn decode_then_measure(code: &CssCode, state: &StateVector) -> Result<[f64; 3], CodeError> {
    if state.n() != code.n() {
        return Err(CodeError::Size { expected: code.n(), got: state.n() });
    }
    let mut s = state.clone();
    for g in inverse_gates(code.encoder_gates()) {
        s.apply_gate(&g).expect("encoder gates fit the code");
    }
    let mut out = [0.0; 3];
    for (c, amp) in s.amplitudes().iter().enumerate() {
        let a = c >> code.data_pos() & 1 == 1;
        let accept = code.x_syndrome_regs().iter().all(|&q| c >> q & 1 == 0);
        out[outcome_index(a, accept)] += amp.norm_sqr();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{max_abs_diff, projector};
    use crate::pauli::{PauliKind, C64};
    use crate::sim::{Backend, StabilizerTableau, StateVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn encode_sv(code: &CssCode, a0: C64, a1: C64) -> StateVector {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << code.n()];
        amps[0] = a0;
        amps[1 << code.data_pos()] = a1;
        let mut s = StateVector::from_amplitudes(amps).unwrap();
        for g in code.encoder_gates() {
            s.apply_gate(g).unwrap();
        }
        s
    }

    fn stabilizers(code: &CssCode) -> Vec<PauliOperator> {
        let mut v: Vec<_> = code.hx().rows().iter().map(|r| PauliOperator::x_on(code.n(), &r.ones())).collect();
        v.extend(code.hz().rows().iter().map(|r| PauliOperator::z_on(code.n(), &r.ones())));
        v
    }

    #[test]
    fn steane_checks_are_orthogonal() {
        let s = build_steane();
        assert!(s.hx().mul_transpose(s.hz()).is_zero());
        assert!(s.self_dual());
        assert_eq!(s.x_syndrome_regs().len(), 3);
        assert_eq!(s.z_syndrome_regs().len(), 3);
    }

    #[test]
    fn encoded_zero_is_stabilized() {
        let code = build_steane();
        let mut t = StabilizerTableau::zero(7).unwrap();
        for g in code.encoder_gates() {
            t.apply_gate(g).unwrap();
        }
        for s in stabilizers(&code) {
            assert!((t.expectation(&s).unwrap().re - 1.0).abs() < 1e-12, "{s}");
        }
        assert!((t.expectation(&code.logical_z()).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn steane_distance_is_three() {
        let code = build_steane();
        let mut count = 0;
        for i in 0..7 {
            for j in i..7 {
                for ki in PauliKind::ALL {
                    for kj in PauliKind::ALL {
                        let mut q = PauliOperator::identity(7);
                        q.set_kind(i, ki);
                        if j != i {
                            q.set_kind(j, kj);
                        } else if kj != PauliKind::I {
                            continue;
                        }
                        count += 1;
                        assert!(!matches!(code.logical_pauli_of(&q).unwrap(), LogicalClass::Logical(_)), "{q}");
                    }
                }
            }
        }
        assert!(count >= 211);
    }

    #[test]
    fn bitwise_h_maps_zero_to_plus() {
        let code = build_steane();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut s = encode_sv(&code, one, zero);
        for q in 0..7 {
            s.apply_gate(&Gate::H(q)).unwrap();
        }
        let plus = encode_sv(&code, h, h);
        assert!((s.inner(&plus).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn logical_operators_act_on_encoded_states() {
        let code = build_steane();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (a0, a1) = (C64::new(rng.gen(), rng.gen()), C64::new(rng.gen(), rng.gen()));
        let nrm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        let (a0, a1) = (a0 / nrm, a1 / nrm);
        let i = C64::new(0.0, 1.0);
        for (op, b0, b1) in [
            (code.logical_x(), a1, a0),
            (code.logical_z(), a0, -a1),
            (code.logical_y(), -i * a1, i * a0),
        ] {
            let mut s = encode_sv(&code, a0, a1);
            s.apply_pauli(&op).unwrap();
            let expect = encode_sv(&code, b0, b1);
            assert!((s.inner(&expect) - C64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn encoder_data_image_is_logical_x() {
        for code in [build_steane(), concatenate(&build_steane(), 2).unwrap()] {
            let n = code.n();
            let img = code.encoder().conjugate_forward(&PauliOperator::x_on(n, &[code.data_pos()])).unwrap();
            let expect = PauliOperator::from_kinds(&[PauliKind::X]);
            assert_eq!(code.logical_pauli_of(&img).unwrap(), LogicalClass::Logical(expect));
            let zimg = code.encoder().conjugate_forward(&PauliOperator::z_on(n, &[code.data_pos()])).unwrap();
            let expect = PauliOperator::from_kinds(&[PauliKind::Z]);
            assert_eq!(code.logical_pauli_of(&zimg).unwrap(), LogicalClass::Logical(expect));
        }
    }

    #[test]
    fn encoder_round_trip() {
        let code = build_steane();
        let both = code.encoder().then(&code.encoder().inverse());
        for j in 0..7 {
            let x = PauliOperator::x_on(7, &[j]);
            assert_eq!(both.conjugate(&x).unwrap(), x);
        }
    }

    #[test]
    fn concatenation_sizes() {
        let s = build_steane();
        assert_eq!(concatenate(&s, 1).unwrap().n(), 7);
        let c2 = concatenate(&s, 2).unwrap();
        assert_eq!((c2.n(), c2.distance()), (49, 9));
        assert!(matches!(concatenate(&s, 3), Err(CodeError::Capability(3))));
        let mut t = StabilizerTableau::zero(49).unwrap();
        for g in c2.encoder_gates() {
            t.apply_gate(g).unwrap();
        }
        for s in stabilizers(&c2) {
            assert!((t.expectation(&s).unwrap().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn level_two_weight_two_never_logical() {
        let c2 = concatenate(&build_steane(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let i = rng.gen_range(0..49);
            let j = (i + rng.gen_range(1..49)) % 49;
            let mut q = PauliOperator::identity(49);
            q.set_kind(i, PauliKind::ALL[rng.gen_range(1..4)]);
            q.set_kind(j, PauliKind::ALL[rng.gen_range(1..4)]);
            assert!(!matches!(c2.logical_pauli_of(&q).unwrap(), LogicalClass::Logical(_)));
        }
    }

    #[test]
    fn decode_examples() {
        let code = build_steane();
        let r = code.classical_decode(&BitVec::parse("0000000").unwrap()).unwrap();
        assert_eq!((r.a, r.s.is_zero()), (false, true));
        let r = code.classical_decode(&BitVec::parse("1111111").unwrap()).unwrap();
        assert_eq!((r.a, r.s.is_zero()), (true, true));
        // brute-force Hamming oracle over all codewords and single flips
        let h = code.hz().clone();
        for w in 0..128u32 {
            let c = BitVec::from_bools(&(0..7).map(|i| w >> i & 1 == 1).collect::<Vec<_>>());
            if !h.mul_vec(&c).is_zero() {
                continue;
            }
            let a = c.weight() % 2 == 1;
            assert_eq!(code.classical_decode(&c).unwrap(), DecodeResult { a, s: BitVec::zeros(7) });
            for e in 0..7 {
                let mut flipped = c.clone();
                flipped.flip(e);
                let r = code.classical_decode(&flipped).unwrap();
                assert_eq!(r.a, a);
                assert_eq!(r.s.ones(), vec![e]);
            }
        }
        assert!(code.classical_decode(&BitVec::zeros(6)).is_err());
    }

    #[test]
    fn classification_examples() {
        let code = build_steane();
        assert_eq!(code.logical_pauli_of(&PauliOperator::identity(7)).unwrap(), LogicalClass::Trivial);
        assert_eq!(
            code.logical_pauli_of(&PauliOperator::x_on(7, &(0..7).collect::<Vec<_>>())).unwrap(),
            LogicalClass::Logical("X".parse().unwrap())
        );
        match code.logical_pauli_of(&PauliOperator::x_on(7, &[0])).unwrap() {
            LogicalClass::Detected { x_syndrome, z_syndrome } => {
                assert!(!x_syndrome.is_zero());
                assert!(z_syndrome.is_zero());
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(code.logical_pauli_of(&code.logical_y()).unwrap(), LogicalClass::Logical("Y".parse().unwrap()));
    }

    #[test]
    fn induced_logical_matches_statevector_action() {
        let code = build_steane();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let stabs = stabilizers(&code);
        for _ in 0..30 {
            let mut q = code.logical_y();
            if rng.gen_bool(0.5) {
                q = &q * &code.logical_x();
            }
            for s in &stabs {
                if rng.gen_bool(0.5) {
                    q = &q * s;
                }
            }
            let LogicalClass::Logical(l) = code.logical_pauli_of(&q).unwrap() else { panic!() };
            let (a0, a1) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
            let mut s = encode_sv(&code, a0, a1);
            s.apply_pauli(&q).unwrap();
            let lm = l.to_dense();
            let expect = encode_sv(&code, lm[(0, 0)] * a0 + lm[(0, 1)] * a1, lm[(1, 0)] * a0 + lm[(1, 1)] * a1);
            let m1 = projector(&s.to_dvector());
            let m2 = projector(&expect.to_dvector());
            assert!(max_abs_diff(&m1, &m2) < 1e-9);
            assert!((s.inner(&expect) - C64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn measure_then_decode_equals_decode_then_measure() {
        let code = build_steane();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let (a0, a1) = (C64::new(rng.gen(), rng.gen()), C64::new(rng.gen(), rng.gen()));
            let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
            let base = encode_sv(&code, a0 / norm, a1 / norm);
            for i in 0..7 {
                for j in i..7 {
                    for kind in [PauliKind::X, PauliKind::Z, PauliKind::Y] {
                        let mut q = PauliOperator::single(7, i, kind);
                        q.set_kind(j, kind);
                        let mut s = base.clone();
                        s.apply_pauli(&q).unwrap();
                        let m = measure_then_decode(&code, &s).unwrap();
                        let d = decode_then_measure(&code, &s).unwrap();
                        for k in 0..3 {
                            assert!((m[k] - d[k]).abs() < 1e-9, "{q:?}: {m:?} vs {d:?}");
                        }
                    }
                }
            }
        }
        let zero = encode_sv(&code, C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        assert!((measure_then_decode(&code, &zero).unwrap()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn descriptor_round_trip() {
        let code = build_steane();
        let js = serde_json::to_string(&code.descriptor()).unwrap();
        let back: CodeDescriptor = serde_json::from_str(&js).unwrap();
        let rebuilt = CssCode::from_descriptor(&back).unwrap();
        assert_eq!(rebuilt.descriptor(), code.descriptor());
        assert_eq!(rebuilt.encoder_gates(), code.encoder_gates());
    }

    proptest! {
        #[test]
        fn classification_is_stabilizer_invariant(
            ks in proptest::collection::vec(0usize..4, 7),
            mask in proptest::collection::vec(any::<bool>(), 6),
        ) {
            let code = build_steane();
            let q = PauliOperator::from_kinds(&ks.iter().map(|&k| PauliKind::ALL[k]).collect::<Vec<_>>());
            let mut q2 = q.clone();
            for (s, m) in stabilizers(&code).iter().zip(mask) {
                if m {
                    q2 = &q2 * s;
                }
            }
            prop_assert_eq!(code.logical_pauli_of(&q).unwrap(), code.logical_pauli_of(&q2).unwrap());
        }
    }
}
