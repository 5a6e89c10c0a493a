//! Sender key material and the classical logic the BR-OTP rounds evaluate.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::plan::{magic_blocks, names, wire_blocks, PlanState, RoundKind, RoundLayout};
use super::teleport::{pauli_bits, pauli_from_bits};
use super::{CompiledProgram, QotpError};
use crate::cotp::{BrOtpSpec, RoundFn};
use crate::gadgets::{verifier_key_update, GadgetTranscript, MeasurementRecord};
use crate::gf2::BitVec;
use crate::pauli::{Gate, Permutation, PauliOperator};
use crate::trap::{AuthKey, TrapCode, TrapFamily};

/// Everything the sender draws: one code key, one Pauli per message block, the output
/// keys `S`, and the bits returned in place of `Ŝ` after cheating.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenderKeys {
    pub permutation: Permutation,
    pub paulis: BTreeMap<String, PauliOperator>,
    pub out: Vec<PauliOperator>,
    pub cheat_pad: BitVec,
}

impl SenderKeys {
    /// Message blocks keyed by `P`, in key-drawing order.
    pub fn block_names(p: &CompiledProgram) -> Vec<String> {
        let mut v = wire_blocks(p);
        v.extend(magic_blocks(p).into_iter().flat_map(|(_, b)| b));
        v
    }

    pub fn random<R: Rng + ?Sized>(family: &TrapFamily, p: &CompiledProgram, rng: &mut R) -> Self {
        let len = family.block_len();
        let permutation = Permutation::random(len, rng);
        let paulis = Self::block_names(p).into_iter().map(|n| (n, PauliOperator::random(len, rng))).collect();
        let out = (0..p.registers.b).map(|_| PauliOperator::random(len, rng)).collect();
        let cheat_pad = BitVec::from_bools(&(0..2 * p.registers.b).map(|_| rng.gen()).collect::<Vec<_>>());
        SenderKeys { permutation, paulis, out, cheat_pad }
    }

    /// Number of Pauli-key and pad bits read by [`SenderKeys::from_bits`].
    pub fn bit_len(family: &TrapFamily, p: &CompiledProgram) -> usize {
        let blocks = Self::block_names(p).len() + p.registers.b;
        blocks * 2 * family.block_len() + 2 * p.registers.b
    }

    /// Keys from explicit bits: each Pauli as `x` then `z`, blocks first, then `S`, then the pad.
    pub fn from_bits(family: &TrapFamily, p: &CompiledProgram, permutation: Permutation, bits: &BitVec) -> Result<Self, QotpError> {
        let need = Self::bit_len(family, p);
        if bits.len() < need || permutation.size() != family.block_len() {
            return Err(QotpError::Contract(format!("key material needs {need} bits")));
        }
        let len = family.block_len();
        let all = bits.to_bools();
        let mut at = 0;
        let mut next = |k: usize| {
            let s = all[at..at + k].to_vec();
            at += k;
            s
        };
        let paulis = Self::block_names(p).into_iter().map(|n| (n, pauli_from_bits(&next(2 * len)))).collect();
        let out = (0..p.registers.b).map(|_| pauli_from_bits(&next(2 * len))).collect();
        let cheat_pad = BitVec::from_bools(&next(2 * p.registers.b));
        Ok(SenderKeys { permutation, paulis, out, cheat_pad })
    }

    pub fn auth_key(&self) -> AuthKey {
        AuthKey { permutation: self.permutation.clone(), paulis: self.paulis.clone() }
    }
}

/// Logical Pauli on the data qubit induced by `E*·q·E`.
pub fn induced_logical(trap: &TrapCode, q: &PauliOperator) -> PauliOperator {
    let l = trap.encoder().conjugate(q).expect("block-sized operator");
    l.restrict(&[trap.data_phys()]).hermitian_part()
}

/// `Ŝ` for one output: the logical Pauli induced by `E` from `S·T^out·K`, where `K` is the
/// current key of the block that was teleported out.
pub fn final_key_formula(trap: &TrapCode, s: &PauliOperator, t_out: &PauliOperator, k: &PauliOperator) -> PauliOperator {
    let q = &(s * t_out) * k;
    induced_logical(trap, &q)
}

/// Verifier state after a prefix of rounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replay {
    pub answers: Vec<BitVec>,
    pub key: AuthKey,
    pub location: Vec<String>,
    pub cheating: bool,
    /// Correction bits sent for T gadgets so far.
    pub corrections: Vec<bool>,
    /// `Ŝ` by the formula, once the last round is in, whether or not cheating occurred.
    pub final_key: Option<Vec<PauliOperator>>,
}

/// The sender's classical side: keys, code and compiled program.
#[derive(Clone, Debug)]
pub struct Verifier {
    program: Arc<CompiledProgram>,
    trap: TrapCode,
    keys: SenderKeys,
    layout: RoundLayout,
}

fn fitted(b: &BitVec, len: usize) -> (BitVec, bool) {
    if b.len() == len {
        return (b.clone(), true);
    }
    (BitVec::from_bools(&(0..len).map(|i| i < b.len() && b.get(i)).collect::<Vec<_>>()), false)
}

impl Verifier {
    pub fn new(family: &TrapFamily, program: Arc<CompiledProgram>, keys: SenderKeys) -> Result<Self, QotpError> {
        let trap = family.with_permutation(keys.permutation.clone())?;
        let layout = RoundLayout::new(&program, family.block_len());
        Ok(Verifier { program, trap, keys, layout })
    }

    pub fn layout(&self) -> &RoundLayout {
        &self.layout
    }

    pub fn trap(&self) -> &TrapCode {
        &self.trap
    }

    pub fn keys(&self) -> &SenderKeys {
        &self.keys
    }

    pub fn program(&self) -> &CompiledProgram {
        &self.program
    }

    /// Replays rounds `1..=inputs.len()`. Key updates for the input teleportation use `t_in`
    /// (the receiver's `T^in`, or the simulator's `T^sim`).
    pub fn replay(&self, t_in: &BitVec, inputs: &[BitVec]) -> Result<Replay, QotpError> {
        let l = &self.layout;
        let n = self.trap.len();
        let mut cheating = false;
        let inputs: Vec<BitVec> = inputs
            .iter()
            .zip(&l.input_len)
            .map(|(b, &len)| {
                let (f, ok) = fitted(b, len);
                cheating |= !ok;
                f
            })
            .collect();
        let mut key = self.keys.auth_key();
        let mut answers = Vec::new();
        let mut corrections = Vec::new();
        let mut plan = PlanState::new(&self.program);
        let done = |key: AuthKey, answers, plan: &PlanState, cheating, corrections| Replay {
            answers,
            key,
            location: plan.location().to_vec(),
            cheating,
            corrections,
            final_key: None,
        };
        if inputs.is_empty() {
            return Ok(done(key, answers, &plan, cheating, corrections));
        }
        let (t_in, ok) = fitted(t_in, l.input_len[0]);
        cheating |= !ok;
        for (i, wire) in self.program.registers.b_wires().enumerate() {
            let block = names::b(i);
            let x = if t_in.get(2 * i) { self.trap.logical_x() } else { PauliOperator::identity(n) };
            let z = if t_in.get(2 * i + 1) { self.trap.logical_z() } else { PauliOperator::identity(n) };
            let k = key.paulis.get_mut(&block).ok_or_else(|| QotpError::Wire(format!("wire {wire}")))?;
            *k = (&(&*k * &x) * &z).hermitian_part();
        }
        answers.push(BitVec::zeros(0));
        let mut round = 1;
        for gate in self.program.controlled.iter() {
            let step = plan.begin(gate)?;
            let mut tr = GadgetTranscript {
                gate: gate.name().to_string(),
                register: String::new(),
                target_blocks: step.target_blocks.clone(),
                magic_blocks: step.magic_blocks.clone(),
                records: Vec::new(),
                a_bits: Vec::new(),
                syndrome_ok: Vec::new(),
                correction: None,
            };
            let records = |part: usize, corr: Option<bool>, bits: &BitVec| -> Vec<MeasurementRecord> {
                step.measured(part, corr)
                    .into_iter()
                    .enumerate()
                    .map(|(j, (block, basis))| MeasurementRecord {
                        block,
                        basis,
                        c_bits: BitVec::from_bools(&bits.to_bools()[j * n..(j + 1) * n]).to_string_bits(),
                    })
                    .collect()
            };
            match gate {
                Gate::X(_) | Gate::Y(_) | Gate::Z(_) | Gate::Cnot(..) => {
                    key = verifier_key_update(&self.trap, &key, &step.spec, &tr)?.key;
                }
                Gate::K(_) | Gate::H(_) => {
                    let Some(bits) = inputs.get(round) else { return Ok(done(key, answers, &plan, cheating, corrections)) };
                    tr.records = records(0, None, bits);
                    let u = verifier_key_update(&self.trap, &key, &step.spec, &tr)?;
                    cheating |= u.cheating;
                    answers.push(BitVec::from_bools(&u.a_bits));
                    key = u.key;
                    round += 1;
                    plan.finish(&step, None);
                }
                Gate::T(_) => {
                    let Some(bits) = inputs.get(round) else { return Ok(done(key, answers, &plan, cheating, corrections)) };
                    tr.records = records(0, None, bits);
                    let first = verifier_key_update(&self.trap, &key, &step.spec, &tr)?;
                    let corr = first.correction.expect("first record present");
                    answers.push(BitVec::from_bools(&[corr]));
                    corrections.push(corr);
                    round += 1;
                    let Some(bits) = inputs.get(round) else {
                        cheating |= first.cheating;
                        return Ok(done(key, answers, &plan, cheating, corrections));
                    };
                    tr.records.extend(records(1, Some(corr), bits));
                    let u = verifier_key_update(&self.trap, &key, &step.spec, &tr)?;
                    cheating |= u.cheating;
                    answers.push(BitVec::from_bools(&[u.a_bits[1]]));
                    key = u.key;
                    round += 1;
                    plan.finish(&step, Some(corr));
                }
            }
        }
        let mut out = done(key, answers, &plan, cheating, corrections);
        let Some(bits) = inputs.get(round) else { return Ok(out) };
        let all = bits.to_bools();
        let mut finals = Vec::new();
        for (i, wire) in self.program.registers.b_wires().enumerate() {
            let t_out = pauli_from_bits(&all[i * 2 * n..(i + 1) * 2 * n]);
            let k = out.key.pauli(&plan.location()[wire])?;
            finals.push(final_key_formula(&self.trap, &self.keys.out[i], &t_out, k));
        }
        let answer = if out.cheating {
            self.keys.cheat_pad.clone()
        } else {
            BitVec::from_bools(&finals.iter().flat_map(pauli_bits).collect::<Vec<_>>())
        };
        out.answers.push(answer);
        out.final_key = Some(finals);
        Ok(out)
    }

    /// Round functions for the BR-OTP. With `t_override` set, key updates use it in place
    /// of the first round's input.
    pub fn brotp_spec(self: &Arc<Self>, t_override: Option<BitVec>) -> BrOtpSpec {
        let l = &self.layout;
        let rounds = (0..l.rounds())
            .map(|i| {
                let me = Arc::clone(self);
                let tov = t_override.clone();
                let f: RoundFn = Arc::new(move |x: &BitVec, y: &BitVec| {
                    let (b, prev) = if i == 0 { (y, None) } else { (x, Some(y)) };
                    let mut inputs = match prev {
                        Some(s) => me.split_state(s, i),
                        None => Vec::new(),
                    };
                    inputs.push(b.clone());
                    let t_in = tov.clone().unwrap_or_else(|| inputs[0].clone());
                    let m = match me.replay(&t_in, &inputs) {
                        Ok(r) => r.answers.get(i).cloned().unwrap_or_else(|| BitVec::zeros(me.layout.output_len[i])),
                        Err(_) => BitVec::zeros(me.layout.output_len[i]),
                    };
                    let s = inputs.iter().fold(BitVec::zeros(0), |acc, v| acc.concat(v));
                    (m, s)
                });
                f
            })
            .collect();
        BrOtpSpec::new(rounds, l.state_len())
    }

    fn split_state(&self, s: &BitVec, count: usize) -> Vec<BitVec> {
        let all = s.to_bools();
        let mut at = 0;
        let mut out = Vec::with_capacity(count + 1);
        for &len in &self.layout.input_len[..count] {
            let end = (at + len).min(all.len());
            let mut v: Vec<bool> = all[at.min(end)..end].to_vec();
            v.resize(len, false);
            out.push(BitVec::from_bools(&v));
            at += len;
        }
        out
    }

    /// Round kind of 1-based round `i`.
    pub fn round_kind(&self, i: usize) -> Option<RoundKind> {
        self.layout.kinds.get(i.checked_sub(1)?).copied()
    }
}
