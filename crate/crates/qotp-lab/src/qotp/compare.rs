//! Exact trace distance between the real protocol and the simulated one, over the whole
//! key and measurement ensemble, for Clifford programs on the tableau backend.
//!
//! For a fixed code permutation the environment's view is a classical transcript `c` and a
//! stabilizer state on the kept qubits whose generator signs `s` are affine in the key and
//! outcome bits `v`. We fit `(c, s) = y₀ ⊕ M·v` from `V + 1` runs, check it on random
//! points, and sum over the image instead of over `2^V` key choices.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::plan::PlanState;
use super::protocol::{prepare_sender_message, run_receiver, Adversary, BrOtpMode, EnvRegisters, QotpSetup};
use super::simulator::{prepare_simulated_message, IdealChannel};
use super::verifier::SenderKeys;
use super::{CompiledProgram, QotpError};
use crate::dense::trace_distance;
use crate::gf2::{BitMatrix, BitVec};
use crate::pauli::{Gate, Permutation, PauliOperator, C64};
use crate::sim::{Backend, BackendKind, QuantumState};
use crate::trap::{TrapFamily, Verdict};

/// Largest affine hull enumerated.
pub const MAX_HULL_DIM: usize = 22;

/// Replays a bit tape through `gen::<f64>()`: bit 1 gives `u = 0`, bit 0 gives `u = 0.75`,
/// so a fair measurement returns the tape bit and a deterministic one is unaffected.
#[derive(Clone, Debug)]
pub struct TapeRng {
    bits: Vec<bool>,
    draws: usize,
}

impl TapeRng {
    pub fn new(bits: Vec<bool>) -> Self {
        TapeRng { bits, draws: 0 }
    }

    pub fn draws(&self) -> usize {
        self.draws
    }
}

impl RngCore for TapeRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let bit = self.bits.get(self.draws).copied().unwrap_or(false);
        self.draws += 1;
        if bit {
            0
        } else {
            0xC000_0000_0000_0000
        }
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum World {
    Real,
    Simulated,
}

/// Builds a fresh adversary for each run.
pub type AdversaryFactory<'a> = &'a (dyn Fn() -> Box<dyn Adversary> + Sync);

/// The experiment: channel, code, and the environment's input (each `A` and `B` qubit
/// maximally entangled with a purification qubit in `W`).
#[derive(Clone, Debug)]
pub struct Comparison {
    pub family: TrapFamily,
    pub program: Arc<CompiledProgram>,
    /// Gates the simulated world's ideal channel applies; the program's base by default.
    pub ideal: Vec<Gate>,
}

struct RunView {
    c: BitVec,
    rows: Vec<PauliOperator>,
    kept: Vec<usize>,
    draws: usize,
}

/// Affine description of one world at one permutation.
#[derive(Clone, Debug)]
struct Structure {
    c0: u128,
    s0: u128,
    /// `(pivot, c part, s part)` of the reduced rows with nonzero `c`.
    crows: Vec<(usize, u128, u128)>,
    /// Sign functionals that are constant on every fibre.
    h: Vec<u128>,
    /// Kept-qubit stabilizer generators with `+` sign.
    gens: Vec<PauliOperator>,
}

/// Result of an exact comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub trace_distance: f64,
    pub permutations: usize,
    pub variables: usize,
    pub hull_dim: usize,
    pub classes: usize,
    pub kept_qubits: usize,
}

fn to_u128(v: &BitVec) -> Result<u128, QotpError> {
    if v.len() > 128 {
        return Err(QotpError::Capacity(format!("{} view bits exceed 128", v.len())));
    }
    Ok(v.ones().into_iter().fold(0u128, |acc, i| acc | 1u128 << i))
}

fn parity(x: u128) -> bool {
    x.count_ones() % 2 == 1
}

fn sign_bit(p: &PauliOperator) -> bool {
    p.letter_phase() == 2
}

impl Comparison {
    pub fn new(family: TrapFamily, program: CompiledProgram) -> Result<Self, QotpError> {
        if program.controlled.iter().any(|g| matches!(g, Gate::T(_))) {
            return Err(QotpError::Nonaffine("T gadgets make the receiver's circuit depend on outcomes".into()));
        }
        Ok(Comparison { family, ideal: program.base.clone(), program: Arc::new(program) })
    }

    fn setup(&self) -> QotpSetup {
        QotpSetup { family: self.family.clone(), program: Arc::clone(&self.program), mode: BrOtpMode::Ideal }
    }

    pub fn key_bits(&self) -> usize {
        SenderKeys::bit_len(&self.family, &self.program)
    }

    fn run(&self, world: World, perm: &Permutation, v: &BitVec, adversary: AdversaryFactory<'_>) -> Result<RunView, QotpError> {
        let kb = self.key_bits();
        let bits = v.to_bools();
        let keys = SenderKeys::from_bits(&self.family, &self.program, perm.clone(), &BitVec::from_bools(&bits[..kb]))?;
        let mut tape = TapeRng::new(bits[kb..].to_vec());
        let regs = self.program.registers;
        let pairs = regs.a + regs.b;
        let mut state = QuantumState::zero(BackendKind::Tab, 2 * pairs)?;
        for i in 0..pairs {
            state.apply_gate(&Gate::H(pairs + i))?;
            state.apply_gate(&Gate::Cnot(pairs + i, i))?;
        }
        let env = EnvRegisters { a: (0..regs.a).collect(), b: (regs.a..pairs).collect(), w: (pairs..2 * pairs).collect() };
        let setup = self.setup();
        let mut msg = match world {
            World::Real => prepare_sender_message(&setup, &keys, &mut state, &env.a, &mut ChaCha8Rng::seed_from_u64(0))?.0,
            World::Simulated => {
                let base = self.ideal.clone();
                let channel = Arc::new(Mutex::new(IdealChannel::new(regs, base, env.a.clone())?));
                prepare_simulated_message(&setup, &keys, &mut state, channel, 0)?.0
            }
        };
        let mut adv = adversary();
        let out = run_receiver(&self.program, &mut msg, &mut state, &env, adv.as_mut(), &mut tape)?;
        let mut plan = PlanState::new(&self.program);
        for g in &self.program.controlled {
            let st = plan.begin(g)?;
            plan.finish(&st, None);
        }
        let mut kept = out.output.clone();
        kept.extend(&env.w);
        let b_wires = regs.b_wires();
        for (w, block) in plan.location().iter().enumerate() {
            if !b_wires.contains(&w) {
                kept.extend(msg.layout.block(block)?);
            }
        }
        let QuantumState::Tab(t) = &state else { unreachable!("tableau backend") };
        Ok(RunView { c: out.transcript_bits(), rows: t.stabilizers().to_vec(), kept, draws: tape.draws() })
    }

    fn analyze(&self, world: World, perm: &Permutation, adversary: AdversaryFactory<'_>) -> Result<(Structure, usize), QotpError> {
        let kb = self.key_bits();
        let probe = self.run(world, perm, &BitVec::zeros(kb), adversary)?;
        let nv = kb + probe.draws;
        let reference = self.run(world, perm, &BitVec::zeros(nv), adversary)?;
        let kept = reference.kept.clone();
        let n = reference.rows.first().map_or(0, PauliOperator::n);
        let others: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
        let restricted: Vec<BitVec> = reference
            .rows
            .iter()
            .map(|r| {
                let x = others.iter().map(|&q| r.x_bit(q));
                let z = others.iter().map(|&q| r.z_bit(q));
                BitVec::from_bools(&x.chain(z).collect::<Vec<_>>())
            })
            .collect();
        let kernel = BitMatrix::new(2 * others.len(), restricted).transpose().nullspace();
        if kernel.len() > 128 {
            return Err(QotpError::Capacity(format!("{} kept generators", kernel.len())));
        }
        let product = |rows: &[PauliOperator], u: &BitVec| {
            u.ones().into_iter().fold(PauliOperator::identity(n), |acc, i| &acc * &rows[i])
        };
        let gens: Vec<PauliOperator> = kernel.iter().map(|u| product(&reference.rows, u).restrict(&kept)).collect();
        let view = |v: &BitVec| -> Result<(u128, u128), QotpError> {
            let r = self.run(world, perm, v, adversary)?;
            let same = r.rows.len() == reference.rows.len()
                && r.rows.iter().zip(&reference.rows).all(|(a, b)| a.hermitian_part() == b.hermitian_part())
                && r.kept == kept
                && r.draws == reference.draws;
            if !same {
                return Err(QotpError::Nonaffine("stabilizer structure changed between runs".into()));
            }
            let s = kernel.iter().enumerate().fold(0u128, |acc, (l, u)| acc | u128::from(sign_bit(&product(&r.rows, u))) << l);
            Ok((to_u128(&r.c)?, s))
        };
        let (c0, s0) = view(&BitVec::zeros(nv))?;
        let mut cols = Vec::with_capacity(nv);
        for j in 0..nv {
            let mut e = BitVec::zeros(nv);
            e.set(j, true);
            let (c, s) = view(&e)?;
            cols.push((c ^ c0, s ^ s0));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..4 {
            let v = BitVec::from_bools(&(0..nv).map(|_| rng.gen()).collect::<Vec<_>>());
            let want = v.ones().into_iter().fold((c0, s0), |(c, s), j| (c ^ cols[j].0, s ^ cols[j].1));
            if view(&v)? != want {
                return Err(QotpError::Nonaffine(format!("{world:?} view at {perm:?}")));
            }
        }
        // eliminate on c bits first, then s bits
        let mut rows = cols;
        let mut crows = Vec::new();
        let mut r = 0;
        for bit in 0..128 {
            let Some(p) = (r..rows.len()).find(|&i| rows[i].0 >> bit & 1 == 1) else { continue };
            rows.swap(r, p);
            let pivot = rows[r];
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && row.0 >> bit & 1 == 1 {
                    row.0 ^= pivot.0;
                    row.1 ^= pivot.1;
                }
            }
            crows.push((bit, pivot.0, pivot.1));
            r += 1;
        }
        let ls = kernel.len();
        let d: Vec<BitVec> = rows[r..]
            .iter()
            .filter(|row| row.1 != 0)
            .map(|row| BitVec::from_bools(&(0..ls).map(|l| row.1 >> l & 1 == 1).collect::<Vec<_>>()))
            .collect();
        let h = if d.is_empty() {
            (0..ls).map(|l| 1u128 << l).collect()
        } else {
            BitMatrix::new(ls, d).nullspace().iter().map(to_u128).collect::<Result<_, _>>()?
        };
        Ok((Structure { c0, s0, crows, h, gens }, nv))
    }

    /// Trace distance between the environment's final states in the two worlds.
    pub fn trace_distance(&self, adversary: AdversaryFactory<'_>) -> Result<ComparisonReport, QotpError> {
        let perms = Permutation::all(self.family.block_len());
        let mut structs: Vec<(World, Structure)> = Vec::new();
        let mut variables = 0;
        for world in [World::Real, World::Simulated] {
            for perm in &perms {
                let (s, nv) = self.analyze(world, perm, adversary)?;
                variables = variables.max(nv);
                structs.push((world, s));
            }
        }
        let kept_qubits = structs[0].1.gens.first().map_or(0, PauliOperator::n);
        if structs.iter().any(|(_, s)| s.gens.first().map_or(0, PauliOperator::n) != kept_qubits) {
            return Err(QotpError::Contract("worlds keep different numbers of qubits".into()));
        }
        // affine hull of all supports
        let base = structs[0].1.c0;
        let mut hull: Vec<u128> = Vec::new();
        let candidates = structs.iter().flat_map(|(_, s)| s.crows.iter().map(|r| r.1).chain(std::iter::once(s.c0 ^ base)));
        for mut x in candidates {
            for &b in &hull {
                x = x.min(x ^ b);
            }
            if x != 0 {
                hull.push(x);
                hull.sort_unstable_by(|a, b| b.cmp(a));
            }
        }
        if hull.len() > MAX_HULL_DIM {
            return Err(QotpError::Budget(format!("affine hull of dimension {} exceeds {MAX_HULL_DIM}", hull.len())));
        }
        let mut classes: HashMap<Vec<u64>, u64> = HashMap::new();
        let mut c = base;
        let mut key = Vec::new();
        for step in 0u64..1 << hull.len() {
            if step > 0 {
                c ^= hull[step.trailing_zeros() as usize];
            }
            key.clear();
            let mut word = 0u64;
            let mut used = 0;
            let mut push = |bit: bool, key: &mut Vec<u64>| {
                word |= u64::from(bit) << used;
                used += 1;
                if used == 64 {
                    key.push(word);
                    word = 0;
                    used = 0;
                }
            };
            for (_, s) in &structs {
                let mut delta = c ^ s.c0;
                let mut seff = s.s0;
                for &(p, cr, sr) in &s.crows {
                    if delta >> p & 1 == 1 {
                        delta ^= cr;
                        seff ^= sr;
                    }
                }
                let member = delta == 0;
                push(member, &mut key);
                if member {
                    for &h in &s.h {
                        push(parity(h & seff), &mut key);
                    }
                }
            }
            key.push(word | 1u64 << used.min(63));
            *classes.entry(key.clone()).or_insert(0) += 1;
        }
        let dim = 1usize << kept_qubits;
        let weight = 1.0 / perms.len() as f64;
        let mut total = 0.0;
        for (key, count) in &classes {
            let mut bits = key.iter().flat_map(|w| (0..64).map(move |i| w >> i & 1 == 1));
            let mut real = DMatrix::<C64>::zeros(dim, dim);
            let mut sim = DMatrix::<C64>::zeros(dim, dim);
            for (world, s) in &structs {
                if !bits.next().expect("member bit") {
                    continue;
                }
                let mut rho = DMatrix::<C64>::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0);
                for &h in &s.h {
                    let sign = if bits.next().expect("sign bit") { -1.0 } else { 1.0 };
                    let q = (0..s.gens.len())
                        .filter(|l| h >> l & 1 == 1)
                        .fold(PauliOperator::identity(kept_qubits), |acc, l| &acc * &s.gens[l]);
                    let factor = DMatrix::<C64>::identity(dim, dim) + q.to_dense() * C64::new(sign, 0.0);
                    rho = factor * rho;
                }
                let p = weight * 0.5f64.powi(s.crows.len() as i32);
                match world {
                    World::Real => real += rho * C64::new(p, 0.0),
                    World::Simulated => sim += rho * C64::new(p, 0.0),
                }
            }
            total += *count as f64 * trace_distance(&real, &sim);
        }
        Ok(ComparisonReport {
            trace_distance: total,
            permutations: perms.len(),
            variables,
            hull_dim: hull.len(),
            classes: classes.len(),
            kept_qubits,
        })
    }
}

/// `Pr_π[NontrivialAccept]` of a Pauli attack on one authenticated block.
pub fn attack_epsilon(family: &TrapFamily, attack: &PauliOperator) -> Result<f64, QotpError> {
    let perms = Permutation::all(family.block_len());
    let mut hits = 0usize;
    for p in &perms {
        let trap = family.with_permutation(p.clone())?;
        if trap.classify(attack)?.verdict == Verdict::NontrivialAccept {
            hits += 1;
        }
    }
    Ok(hits as f64 / perms.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tape_forces_fair_outcomes_only() {
        let mut t = TapeRng::new(vec![true, false]);
        let u1: f64 = t.gen();
        let u2: f64 = t.gen();
        assert_eq!((u1, u2), (0.0, 0.75));
        assert_eq!(t.draws(), 2);
    }
}
