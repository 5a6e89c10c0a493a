//! Trap codes: a CSS block padded with `|0⟩` and `|+⟩` traps and hidden by a permutation.
//!
//! Roles `0..n` hold the base code, `n..2n` are X-traps (`|0⟩`, flip on X errors) and
//! `2n..3n` are Z-traps (`|+⟩`, flip on Z errors). Role `r` sits at physical position `π(r)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::css::{CodeError, CssCode, DecodeResult, LogicalClass};
use crate::gf2::{BitMatrix, BitVec};
use crate::pauli::{inverse_gates, CliffordUnitary, Gate, PauliKind, PauliOperator, Permutation};
use crate::rng::{child_rng, child_seeds};
use crate::sim::{measure_computational, Backend, SimError};
use crate::stats::{wilson, Z95};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrapError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("expected {expected} qubits, got {got}")]
    Size { expected: usize, got: usize },
    #[error("no key for register {0:?}")]
    UnknownRegister(String),
    #[error("attack weight {weight} exceeds block length {len}")]
    Weight { weight: usize, len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Base(usize),
    XTrap(usize),
    ZTrap(usize),
}

/// Basis of a transversal measurement of a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Computational,
    /// Measured after bitwise H; decodes the logical X eigenvalue.
    Hadamard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    TrivialAccept,
    NontrivialAccept,
    Reject,
}

impl From<&LogicalClass> for Verdict {
    fn from(c: &LogicalClass) -> Self {
        match c {
            LogicalClass::Trivial => Verdict::TrivialAccept,
            LogicalClass::Logical(_) => Verdict::NontrivialAccept,
            LogicalClass::Detected { .. } => Verdict::Reject,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackClassification {
    /// Outcome when the block is verified coherently.
    pub verdict: Verdict,
    /// Outcome when the block is measured in the computational basis (Z parts are invisible).
    pub x_only_verdict: Verdict,
    /// The logical Pauli applied on acceptance, with phase.
    pub induced_logical: Option<PauliOperator>,
}

struct FamilyInner {
    base: CssCode,
    role_code: CssCode,
    dual_role_code: CssCode,
    role_gates: Vec<Gate>,
}

/// All trap codes over one base code; cheap to clone.
#[derive(Clone)]
pub struct TrapFamily {
    inner: Arc<FamilyInner>,
}

impl std::fmt::Debug for TrapFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TrapFamily({}, n={})", self.inner.base.name(), self.inner.base.n())
    }
}

fn identity_rows(width: usize, start: usize, count: usize) -> BitMatrix {
    let rows = (0..count)
        .map(|i| {
            let mut v = BitVec::zeros(width);
            v.set(start + i, true);
            v
        })
        .collect();
    BitMatrix::new(width, rows)
}

impl TrapFamily {
    pub fn new(base: CssCode) -> Result<Self, TrapError> {
        let n = base.n();
        let w = 3 * n;
        let base_cols: Vec<usize> = (0..n).collect();
        let hx = base.hx().spread_columns(w, &base_cols).vstack(&identity_rows(w, 2 * n, n));
        let hz = base.hz().spread_columns(w, &base_cols).vstack(&identity_rows(w, n, n));
        let pad = |v: &BitVec| {
            let mut out = BitVec::zeros(w);
            for j in v.ones() {
                out.set(j, true);
            }
            out
        };
        let role_code = CssCode::from_checks(
            &format!("{}-trap", base.name()),
            hx,
            hz,
            pad(base.x_bar()),
            pad(base.z_bar()),
            base.distance(),
        )?;
        let dual_role_code = role_code.dual()?;
        let mut role_gates = base.encoder_gates().to_vec();
        role_gates.extend((2 * n..w).map(Gate::H));
        Ok(TrapFamily { inner: Arc::new(FamilyInner { base, role_code, dual_role_code, role_gates }) })
    }

    pub fn base(&self) -> &CssCode {
        &self.inner.base
    }

    /// Qubits per authenticated block, `3n`.
    pub fn block_len(&self) -> usize {
        3 * self.inner.base.n()
    }

    /// The trap code for `π = id`, as a CSS code on roles.
    pub fn role_code(&self) -> &CssCode {
        &self.inner.role_code
    }

    pub fn role_of(&self, r: usize) -> Role {
        let n = self.inner.base.n();
        match r / n {
            0 => Role::Base(r),
            1 => Role::XTrap(r - n),
            _ => Role::ZTrap(r - 2 * n),
        }
    }

    pub fn with_permutation(&self, pi: Permutation) -> Result<TrapCode, TrapError> {
        if pi.size() != self.block_len() {
            return Err(TrapError::Size { expected: self.block_len(), got: pi.size() });
        }
        Ok(TrapCode { family: self.clone(), pi })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TrapCode {
        TrapCode { family: self.clone(), pi: Permutation::random(self.block_len(), rng) }
    }

    /// Exact probabilities `(nontrivial accept, any accept)` of the attack `L^⊗w` on `w`
    /// fixed positions, over a uniform permutation. Returned as `(count, count, C(3n, w))`.
    pub fn exact_uniform_letter_counts(&self, letter: PauliKind, w: usize) -> Result<(u64, u64, u64), TrapError> {
        let len = self.block_len();
        if w > len {
            return Err(TrapError::Weight { weight: w, len });
        }
        let mut nontrivial = 0u64;
        let mut accept = 0u64;
        let mut total = 0u64;
        let mut subset: Vec<usize> = (0..w).collect();
        loop {
            let mut q = PauliOperator::identity(len);
            for &r in &subset {
                q.set_kind(r, letter);
            }
            match Verdict::from(&self.inner.role_code.logical_pauli_of(&q)?) {
                Verdict::NontrivialAccept => {
                    nontrivial += 1;
                    accept += 1;
                }
                Verdict::TrivialAccept => accept += 1,
                Verdict::Reject => {}
            }
            total += 1;
            // next w-subset in lexicographic order
            let Some(i) = (0..w).rev().find(|&i| subset[i] < len - w + i) else { break };
            subset[i] += 1;
            for j in i + 1..w {
                subset[j] = subset[j - 1] + 1;
            }
        }
        Ok((nontrivial, accept, total))
    }
}

/// One member `E_π` of a trap family.
#[derive(Clone, Debug)]
pub struct TrapCode {
    family: TrapFamily,
    pi: Permutation,
}

impl TrapCode {
    pub fn family(&self) -> &TrapFamily {
        &self.family
    }

    pub fn permutation(&self) -> &Permutation {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.family.block_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical position of the logical input qubit.
    pub fn data_phys(&self) -> usize {
        self.pi.apply(self.family.base().data_pos())
    }

    /// Positions checked on verification: everything except the data qubit.
    pub fn check_positions(&self) -> Vec<usize> {
        let d = self.data_phys();
        (0..self.len()).filter(|&q| q != d).collect()
    }

    /// `P_π (E ⊗ I^n ⊗ H^n) P_π*` as a gate list on block positions.
    pub fn encoder_gates(&self) -> Vec<Gate> {
        self.family.inner.role_gates.iter().map(|g| g.remap(|r| self.pi.apply(r))).collect()
    }

    pub fn encoder(&self) -> CliffordUnitary {
        CliffordUnitary::from_gates(self.len(), &self.encoder_gates()).expect("gates stay in the block")
    }

    /// A role-indexed operator placed at physical positions.
    pub fn to_physical(&self, role_op: &PauliOperator) -> PauliOperator {
        role_op.embed(self.len(), self.pi.mapping())
    }

    /// A physical operator read in role order, keeping its coefficient.
    pub fn to_roles(&self, q: &PauliOperator) -> PauliOperator {
        q.restrict_with_phase(self.pi.mapping())
    }

    pub fn logical_x(&self) -> PauliOperator {
        self.to_physical(&self.family.role_code().logical_x())
    }

    pub fn logical_z(&self) -> PauliOperator {
        self.to_physical(&self.family.role_code().logical_z())
    }

    pub fn logical_y(&self) -> PauliOperator {
        self.to_physical(&self.family.role_code().logical_y())
    }

    /// Stabilizer generators of the encoded block, on physical positions.
    pub fn stabilizers(&self) -> Vec<PauliOperator> {
        let rc = self.family.role_code();
        let xs = rc.hx().rows().iter().map(|r| PauliOperator::x_on(self.len(), &r.ones()));
        let zs = rc.hz().rows().iter().map(|r| PauliOperator::z_on(self.len(), &r.ones()));
        xs.chain(zs).map(|p| self.to_physical(&p)).collect()
    }

    pub fn classify(&self, q: &PauliOperator) -> Result<AttackClassification, TrapError> {
        if q.n() != self.len() {
            return Err(TrapError::Size { expected: self.len(), got: q.n() });
        }
        let roles = self.to_roles(q);
        let rc = self.family.role_code();
        let full = rc.logical_pauli_of(&roles)?;
        let x_only = rc.x_only_class(&roles)?;
        let induced_logical = match &full {
            LogicalClass::Logical(l) => Some(l.clone()),
            _ => None,
        };
        Ok(AttackClassification { verdict: Verdict::from(&full), x_only_verdict: Verdict::from(&x_only), induced_logical })
    }

    /// Classical decoding of a measured block. The syndrome `s` is reported on physical positions.
    pub fn decode(&self, c: &BitVec, basis: Basis) -> Result<DecodeResult, TrapError> {
        if c.len() != self.len() {
            return Err(TrapError::Size { expected: self.len(), got: c.len() });
        }
        let code = match basis {
            Basis::Computational => &self.family.inner.role_code,
            Basis::Hadamard => &self.family.inner.dual_role_code,
        };
        let r = code.classical_decode(&c.select(self.pi.mapping()))?;
        let mut s = BitVec::zeros(self.len());
        for i in r.s.ones() {
            s.set(self.pi.apply(i), true);
        }
        Ok(DecodeResult { a: r.a, s })
    }
}

/// Secret key: one permutation shared by all registers, one Pauli per register.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthKey {
    pub permutation: Permutation,
    pub paulis: BTreeMap<String, PauliOperator>,
}

impl AuthKey {
    pub fn pauli(&self, reg: &str) -> Result<&PauliOperator, TrapError> {
        self.paulis.get(reg).ok_or_else(|| TrapError::UnknownRegister(reg.to_string()))
    }

    pub fn trap(&self, family: &TrapFamily) -> Result<TrapCode, TrapError> {
        family.with_permutation(self.permutation.clone())
    }
}

/// Draws `π` and then one uniform Pauli per register, in the order given.
pub fn sample_auth_key<R: Rng + ?Sized, S: AsRef<str>>(family: &TrapFamily, registers: &[S], rng: &mut R) -> AuthKey {
    let permutation = Permutation::random(family.block_len(), rng);
    let paulis = registers
        .iter()
        .map(|r| (r.as_ref().to_string(), PauliOperator::random(family.block_len(), rng)))
        .collect();
    AuthKey { permutation, paulis }
}

fn check_block(family: &TrapFamily, block: &[usize]) -> Result<(), TrapError> {
    if block.len() != family.block_len() {
        return Err(TrapError::Size { expected: family.block_len(), got: block.len() });
    }
    Ok(())
}

/// Applies `P_reg·E_π` to `block`. The input qubit must sit at `block[data_phys]` with
/// every other block qubit in `|0⟩`.
pub fn authenticate_register<B: Backend + ?Sized>(
    family: &TrapFamily,
    key: &AuthKey,
    reg: &str,
    state: &mut B,
    block: &[usize],
) -> Result<(), TrapError> {
    check_block(family, block)?;
    let trap = key.trap(family)?;
    for g in trap.encoder_gates() {
        state.apply_gate(&g.remap(|q| block[q]))?;
    }
    state.apply_pauli(&key.pauli(reg)?.embed(state.n(), block))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub accept: bool,
    /// State index of the decoded qubit.
    pub data_qubit: usize,
    /// Outcomes on the check positions, in block order.
    pub checks: Vec<bool>,
}

/// Undoes the key and `E_π`, then measures every check position.
pub fn verify_and_decode<B: Backend + ?Sized, R: Rng + ?Sized>(
    family: &TrapFamily,
    key: &AuthKey,
    reg: &str,
    state: &mut B,
    block: &[usize],
    rng: &mut R,
) -> Result<Verification, TrapError> {
    check_block(family, block)?;
    let trap = key.trap(family)?;
    state.apply_pauli(&key.pauli(reg)?.embed(state.n(), block))?;
    for g in inverse_gates(&trap.encoder_gates()) {
        state.apply_gate(&g.remap(|q| block[q]))?;
    }
    let targets: Vec<usize> = trap.check_positions().iter().map(|&q| block[q]).collect();
    let m = measure_computational(state, &targets, rng)?;
    Ok(Verification { accept: m.bits.iter().all(|b| !b), data_qubit: block[trap.data_phys()], checks: m.bits })
}

/// Letter pattern of sampled attacks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    X,
    Y,
    Z,
    Mixed,
}

/// Uniform support of size `weight`, letters by `kind`.
pub fn random_attack<R: Rng + ?Sized>(len: usize, weight: usize, kind: AttackKind, rng: &mut R) -> Result<PauliOperator, TrapError> {
    if weight > len {
        return Err(TrapError::Weight { weight, len });
    }
    let support = rand::seq::index::sample(rng, len, weight);
    let mut q = PauliOperator::identity(len);
    for i in support.iter() {
        let letter = match kind {
            AttackKind::X => PauliKind::X,
            AttackKind::Y => PauliKind::Y,
            AttackKind::Z => PauliKind::Z,
            AttackKind::Mixed => [PauliKind::X, PauliKind::Y, PauliKind::Z][rng.gen_range(0..3)],
        };
        q.set_kind(i, letter);
    }
    Ok(q)
}

/// Monte-Carlo estimate of `Pr_π[nontrivial accept]` for one physical attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityEstimate {
    pub attack: PauliOperator,
    pub weight: usize,
    pub samples: u64,
    pub nontrivial: u64,
    pub accepted: u64,
    pub eps_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `(2/3)^{w/2}`.
    pub bound: f64,
}

const CHUNK: u64 = 4096;

pub fn estimate_attack_security<R: Rng + ?Sized>(
    family: &TrapFamily,
    attack: &PauliOperator,
    samples: u64,
    rng: &mut R,
) -> Result<SecurityEstimate, TrapError> {
    let len = family.block_len();
    if attack.n() != len {
        return Err(TrapError::Size { expected: len, got: attack.n() });
    }
    let chunks = samples.div_ceil(CHUNK) as usize;
    let seeds = child_seeds(rng, chunks);
    let counts: Result<Vec<(u64, u64)>, TrapError> = seeds
        .par_iter()
        .enumerate()
        .map(|(c, &seed)| {
            let mut r = child_rng(seed);
            let todo = CHUNK.min(samples - c as u64 * CHUNK);
            let (mut nt, mut acc) = (0, 0);
            for _ in 0..todo {
                let trap = family.sample(&mut r);
                match trap.classify(attack)?.verdict {
                    Verdict::NontrivialAccept => {
                        nt += 1;
                        acc += 1;
                    }
                    Verdict::TrivialAccept => acc += 1,
                    Verdict::Reject => {}
                }
            }
            Ok((nt, acc))
        })
        .collect();
    let (nontrivial, accepted) = counts?.into_iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let (ci_lo, ci_hi) = wilson(nontrivial, samples, Z95);
    let weight = attack.weight();
    Ok(SecurityEstimate {
        attack: attack.clone(),
        weight,
        samples,
        nontrivial,
        accepted,
        eps_hat: if samples == 0 { 0.0 } else { nontrivial as f64 / samples as f64 },
        ci_lo,
        ci_hi,
        bound: (2.0f64 / 3.0).powf(weight as f64 / 2.0),
    })
}

/// Estimates for `attacks` random attacks of one weight.
pub fn weight_sweep<R: Rng + ?Sized>(
    family: &TrapFamily,
    weight: usize,
    kind: AttackKind,
    attacks: usize,
    samples: u64,
    rng: &mut R,
) -> Result<Vec<SecurityEstimate>, TrapError> {
    let mut out = Vec::with_capacity(attacks);
    for _ in 0..attacks {
        let q = random_attack(family.block_len(), weight, kind, rng)?;
        out.push(estimate_attack_security(family, &q, samples, rng)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::css::{build_steane, toy_code};
    use crate::dense::{max_abs_diff, projector};
    use crate::pauli::{pauli_from_index, C64};
    use crate::sim::{Pick, StabilizerTableau, StateVector};
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn steane() -> TrapFamily {
        TrapFamily::new(build_steane()).unwrap()
    }

    fn toy() -> TrapFamily {
        TrapFamily::new(toy_code()).unwrap()
    }

    #[test]
    fn encoded_block_satisfies_trap_stabilizers() {
        let fam = steane();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let trap = fam.sample(&mut rng);
            let mut s = StabilizerTableau::zero(21).unwrap();
            for g in trap.encoder_gates() {
                s.apply_gate(&g).unwrap();
            }
            for st in trap.stabilizers() {
                assert!((s.expectation(&st).unwrap().re - 1.0).abs() < 1e-12);
            }
            assert!((s.expectation(&trap.logical_z()).unwrap().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn base_marginal_matches_bare_encoding() {
        let fam = steane();
        let trap = fam.with_permutation(Permutation::identity(21)).unwrap();
        let mut t = StabilizerTableau::zero(21).unwrap();
        let mut b = StabilizerTableau::zero(7).unwrap();
        for s in [&mut t as &mut dyn Backend, &mut b] {
            s.apply_gate(&Gate::H(fam.base().data_pos())).unwrap();
            s.apply_gate(&Gate::K(fam.base().data_pos())).unwrap();
        }
        for g in trap.encoder_gates() {
            t.apply_gate(&g).unwrap();
        }
        for g in fam.base().encoder_gates() {
            b.apply_gate(g).unwrap();
        }
        let keep: Vec<usize> = (0..7).collect();
        assert!(max_abs_diff(&t.density_of(&keep).unwrap(), &b.density_of(&keep).unwrap()) < 1e-9);
    }

    /// Dense oracle: run `E*·Q·E` on three states and read off the behaviour.
    fn brute_verdict(trap: &TrapCode, q: &PauliOperator) -> Verdict {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let inputs = [
            (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            (C64::new(h, 0.0), C64::new(h, 0.0)),
            (C64::new(h, 0.0), C64::new(0.0, h)),
        ];
        let mut changed = false;
        for (a0, a1) in inputs {
            let mut amps = vec![C64::new(0.0, 0.0); 8];
            amps[0] = a0;
            amps[1 << trap.data_phys()] = a1;
            let mut s = StateVector::from_amplitudes(amps).unwrap();
            for g in trap.encoder_gates() {
                s.apply_gate(&g).unwrap();
            }
            s.apply_pauli(q).unwrap();
            for g in inverse_gates(&trap.encoder_gates()) {
                s.apply_gate(&g).unwrap();
            }
            let mut p = 1.0;
            for c in trap.check_positions() {
                match s.measure(c, Pick::Forced(false)) {
                    Ok(m) => p *= m.probability,
                    Err(_) => p = 0.0,
                }
                if p < 1e-12 {
                    return Verdict::Reject;
                }
            }
            let rho = s.density_of(&[trap.data_phys()]).unwrap();
            let psi = DVector::from_vec(vec![a0, a1]);
            if max_abs_diff(&rho, &projector(&psi)) > 1e-9 {
                changed = true;
            }
        }
        if changed {
            Verdict::NontrivialAccept
        } else {
            Verdict::TrivialAccept
        }
    }

    #[test]
    fn toy_classification_matches_dense_oracle() {
        let fam = toy();
        for pi in Permutation::all(3) {
            let trap = fam.with_permutation(pi).unwrap();
            for idx in 0..64 {
                let q = pauli_from_index(3, idx);
                let c = trap.classify(&q).unwrap();
                assert_eq!(c.verdict, brute_verdict(&trap, &q), "{q} under {:?}", trap.permutation());
            }
        }
    }

    #[test]
    fn pauli_twirl_of_block_is_maximally_mixed() {
        let fam = toy();
        let trap = fam.with_permutation(Permutation::new(vec![2, 0, 1]).unwrap()).unwrap();
        let mut acc = DMatrix::<C64>::zeros(8, 8);
        for idx in 0..64 {
            let mut s = StateVector::zero(3).unwrap();
            s.apply_gate(&Gate::H(trap.data_phys())).unwrap();
            s.apply_gate(&Gate::T(trap.data_phys())).unwrap();
            for g in trap.encoder_gates() {
                s.apply_gate(&g).unwrap();
            }
            s.apply_pauli(&pauli_from_index(3, idx)).unwrap();
            acc += s.density_of(&[0, 1, 2]).unwrap();
        }
        acc /= C64::new(64.0, 0.0);
        let mixed = DMatrix::<C64>::identity(8, 8) / C64::new(8.0, 0.0);
        assert!(max_abs_diff(&acc, &mixed) < 1e-12);
    }

    #[test]
    fn honest_round_trip_accepts_and_preserves_state() {
        let fam = steane();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let key = sample_auth_key(&fam, &["a"], &mut rng);
            let trap = key.trap(&fam).unwrap();
            let block: Vec<usize> = (0..21).collect();
            let mut s = StabilizerTableau::zero(21).unwrap();
            s.apply_gate(&Gate::H(trap.data_phys())).unwrap();
            s.apply_gate(&Gate::K(trap.data_phys())).unwrap();
            authenticate_register(&fam, &key, "a", &mut s, &block).unwrap();
            let v = verify_and_decode(&fam, &key, "a", &mut s, &block, &mut rng).unwrap();
            assert!(v.accept);
            let mut y = PauliOperator::identity(21);
            y.set_kind(v.data_qubit, PauliKind::Y);
            assert!((s.expectation(&y).unwrap().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_trap_flips_are_rejected() {
        let fam = steane();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trap = fam.sample(&mut rng);
        for i in 0..7 {
            let x_trap = trap.permutation().apply(7 + i);
            let z_trap = trap.permutation().apply(14 + i);
            let qx = PauliOperator::single(21, x_trap, PauliKind::X);
            let qz = PauliOperator::single(21, z_trap, PauliKind::Z);
            assert_eq!(trap.classify(&qx).unwrap().verdict, Verdict::Reject);
            assert_eq!(trap.classify(&qz).unwrap().verdict, Verdict::Reject);
            // X on a |+⟩ trap and Z on a |0⟩ trap do nothing
            let qx_plus = PauliOperator::single(21, z_trap, PauliKind::X);
            assert_eq!(trap.classify(&qx_plus).unwrap().verdict, Verdict::TrivialAccept);
        }
        let key = AuthKey { permutation: trap.permutation().clone(), paulis: [("r".to_string(), PauliOperator::identity(21))].into() };
        let block: Vec<usize> = (0..21).collect();
        let mut s = StabilizerTableau::zero(21).unwrap();
        authenticate_register(&fam, &key, "r", &mut s, &block).unwrap();
        s.apply_pauli(&PauliOperator::single(21, trap.permutation().apply(9), PauliKind::X)).unwrap();
        assert!(!verify_and_decode(&fam, &key, "r", &mut s, &block, &mut rng).unwrap().accept);
    }

    #[test]
    fn low_weight_attacks_never_nontrivial() {
        let fam = steane();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let trap = fam.sample(&mut rng);
            for i in 0..21 {
                for j in i..21 {
                    for (a, b) in [(PauliKind::X, PauliKind::Z), (PauliKind::Y, PauliKind::Y), (PauliKind::Z, PauliKind::X)] {
                        let mut q = PauliOperator::identity(21);
                        q.set_kind(i, a);
                        if j != i {
                            q.set_kind(j, b);
                        }
                        assert_ne!(trap.classify(&q).unwrap().verdict, Verdict::NontrivialAccept);
                    }
                }
            }
        }
    }

    #[test]
    fn transversal_x_exact_counts() {
        let (nt, acc, total) = steane().exact_uniform_letter_counts(PauliKind::X, 7).unwrap();
        assert_eq!((nt, acc, total), (246, 492, 116_280));
        let (nt3, _, total3) = steane().exact_uniform_letter_counts(PauliKind::X, 3).unwrap();
        assert_eq!((nt3, total3), (7, 1330));
    }

    #[test]
    fn logical_attack_induces_logical() {
        let fam = steane();
        let trap = fam.sample(&mut ChaCha8Rng::seed_from_u64(7));
        let c = trap.classify(&trap.logical_y()).unwrap();
        assert_eq!(c.verdict, Verdict::NontrivialAccept);
        assert_eq!(c.induced_logical.unwrap().to_text(), "+Y");
        // Z̄ is invisible to a computational-basis measurement's X check, logical as a phase
        let z = trap.classify(&trap.logical_z()).unwrap();
        assert_eq!(z.x_only_verdict, Verdict::TrivialAccept);
    }

    #[test]
    fn measured_blocks_decode_in_both_bases() {
        let fam = steane();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for bit in [false, true] {
            for basis in [Basis::Computational, Basis::Hadamard] {
                let trap = fam.sample(&mut rng);
                let mut s = StabilizerTableau::zero(21).unwrap();
                if basis == Basis::Hadamard {
                    s.apply_gate(&Gate::H(trap.data_phys())).unwrap();
                }
                if bit {
                    let flip = match basis {
                        Basis::Computational => Gate::X(trap.data_phys()),
                        Basis::Hadamard => Gate::Z(trap.data_phys()),
                    };
                    s.apply_gate(&flip).unwrap();
                }
                for g in trap.encoder_gates() {
                    s.apply_gate(&g).unwrap();
                }
                if basis == Basis::Hadamard {
                    for q in 0..21 {
                        s.apply_gate(&Gate::H(q)).unwrap();
                    }
                }
                let m = measure_computational(&mut s, &(0..21).collect::<Vec<_>>(), &mut rng).unwrap();
                let r = trap.decode(&BitVec::from_bools(&m.bits), basis).unwrap();
                assert!(r.accept());
                assert_eq!(r.a, bit, "{basis:?}");
            }
        }
    }

    #[test]
    fn keys_are_reproducible_and_serialize() {
        let fam = steane();
        let k1 = sample_auth_key(&fam, &["a", "b"], &mut ChaCha8Rng::seed_from_u64(9));
        let k2 = sample_auth_key(&fam, &["a", "b"], &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(k1, k2);
        assert_ne!(k1.paulis["a"], k1.paulis["b"]);
        let js = serde_json::to_string(&k1).unwrap();
        assert_eq!(serde_json::from_str::<AuthKey>(&js).unwrap(), k1);
    }

    #[test]
    fn key_letters_are_uniform() {
        let fam = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut counts = [0usize; 4];
        let trials = 8000;
        for _ in 0..trials {
            let k = sample_auth_key(&fam, &["a"], &mut rng);
            counts[k.paulis["a"].kind(0) as usize] += 1;
        }
        let e = trials as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 3 dof, 99.9% quantile
        assert!(chi2 < 16.27, "{counts:?}");
    }

    #[test]
    fn attacking_one_register_leaves_the_other() {
        let fam = steane();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let key = sample_auth_key(&fam, &["a", "b"], &mut rng);
        let a: Vec<usize> = (0..21).collect();
        let b: Vec<usize> = (21..42).collect();
        let mut s = StabilizerTableau::zero(42).unwrap();
        authenticate_register(&fam, &key, "a", &mut s, &a).unwrap();
        authenticate_register(&fam, &key, "b", &mut s, &b).unwrap();
        s.apply_pauli(&PauliOperator::single(42, 3, PauliKind::Y)).unwrap();
        assert!(verify_and_decode(&fam, &key, "b", &mut s, &b, &mut rng).unwrap().accept);
    }

    #[test]
    fn estimate_is_deterministic_and_consistent() {
        let fam = steane();
        let q = PauliOperator::x_on(21, &[0, 1, 2, 3, 4, 5, 6]);
        let e1 = estimate_attack_security(&fam, &q, 20_000, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        let e2 = estimate_attack_security(&fam, &q, 20_000, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        assert_eq!(e1, e2);
        let exact = 246.0 / 116_280.0;
        assert!(e1.ci_lo <= exact && exact <= e1.ci_hi, "{e1:?}");
    }
}
