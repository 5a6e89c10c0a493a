//! Computing on authenticated data: gate gadgets run by an attacker, validated by key updates.
//!
//! A [`Session`] holds both roles. The attacker side owns the quantum state and the
//! block layout; the verifier side owns the key and reads only the message log.

pub mod logical;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::BitVec;
use crate::pauli::{Gate, PauliKind, PauliOperator};
use crate::rng::{stream_rng, Stream};
use crate::sim::{measure_computational, Backend, MagicKind, SimError};
use crate::trap::{authenticate_register, verify_and_decode, AuthKey, Basis, TrapCode, TrapError, TrapFamily, Verification};

pub use logical::magic_for;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GadgetError {
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("no unused {0:?} magic register")]
    MissingMagic(MagicKind),
    #[error("magic register {0:?} was already consumed")]
    MagicReused(String),
    #[error("unknown register {0:?}")]
    UnknownRegister(String),
    #[error("register {0:?} was measured and cannot be used")]
    Measured(String),
    #[error("duplicate register name {0:?}")]
    Duplicate(String),
    #[error("magic inventory mismatch: circuit needs K/T/H = {needed:?}, session holds {available:?}")]
    Inventory { needed: [usize; 3], available: [usize; 3] },
    #[error("outcome vector has length {got}, expected {expected}")]
    OutcomeLength { expected: usize, got: usize },
    #[error("transcript does not fit gadget {0}")]
    Transcript(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interaction {
    None,
    OneWay,
    TwoWay,
}

/// A gate of the universal set on logical register indices, with its resource needs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetSpec {
    pub gate: Gate,
    pub magic: Option<MagicKind>,
    pub interaction: Interaction,
}

impl GadgetSpec {
    pub fn for_gate(gate: Gate) -> Self {
        let interaction = match gate {
            Gate::X(_) | Gate::Y(_) | Gate::Z(_) | Gate::Cnot(..) => Interaction::None,
            Gate::K(_) | Gate::H(_) => Interaction::OneWay,
            Gate::T(_) => Interaction::TwoWay,
        };
        GadgetSpec { gate, magic: magic_for(&gate), interaction }
    }
}

/// Bitwise measurement result sent from attacker to verifier.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub block: String,
    pub basis: Basis,
    pub c_bits: String,
}

impl MeasurementRecord {
    fn bits(&self) -> BitVec {
        BitVec::parse(&self.c_bits).expect("records hold bit strings")
    }
}

/// Everything exchanged while running one gadget.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetTranscript {
    pub gate: String,
    pub register: String,
    /// Blocks holding the target registers when the gadget starts.
    pub target_blocks: Vec<String>,
    /// Magic blocks consumed, in gadget order.
    pub magic_blocks: Vec<String>,
    pub records: Vec<MeasurementRecord>,
    pub a_bits: Vec<bool>,
    pub syndrome_ok: Vec<bool>,
    /// For T: whether the verifier asked for the K correction.
    pub correction: Option<bool>,
}

/// Result of the verifier's processing of a (possibly partial) transcript.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyUpdate {
    pub key: AuthKey,
    pub a_bits: Vec<bool>,
    pub syndrome_ok: Vec<bool>,
    /// Set once the first measurement of a T gadget is decoded.
    pub correction: Option<bool>,
    pub cheating: bool,
}

/// Message log entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "dir", rename_all = "snake_case")]
pub enum Message {
    AttackerToVerifier { block: String, c_bits: String },
    VerifierToAttacker { correction: bool },
}

fn key_mut<'a>(key: &'a mut AuthKey, block: &str) -> Result<&'a mut PauliOperator, GadgetError> {
    key.paulis.get_mut(block).ok_or_else(|| GadgetError::UnknownRegister(block.to_string()))
}

/// Multiplies a block key by a logical operator; keys are kept as Hermitian letters.
fn key_times(key: &mut AuthKey, block: &str, logical: &PauliOperator) -> Result<(), GadgetError> {
    let k = key_mut(key, block)?;
    *k = (&*k * logical).hermitian_part();
    Ok(())
}

/// Pushes the keys of two blocks through bitwise CNOT from `control` to `target`.
fn key_cnot(key: &mut AuthKey, control: &str, target: &str) -> Result<(), GadgetError> {
    let c = key.pauli(control)?.clone();
    let t = key.pauli(target)?.clone();
    let len = c.n();
    let cx = c.x_bits();
    let mut cz = c.z_bits();
    let mut tx = t.x_bits();
    let tz = t.z_bits();
    for i in 0..len {
        tx[i] ^= cx[i];
        cz[i] ^= tz[i];
    }
    *key_mut(key, control)? = PauliOperator::from_bits(&cx, &cz, 0).expect("same length").hermitian_part();
    *key_mut(key, target)? = PauliOperator::from_bits(&tx, &tz, 0).expect("same length").hermitian_part();
    Ok(())
}

/// Pushes a block key through bitwise H.
fn key_hadamard(key: &mut AuthKey, block: &str) -> Result<(), GadgetError> {
    let k = key_mut(key, block)?;
    *k = PauliOperator::from_bits(&k.z_bits(), &k.x_bits(), 0).expect("same length").hermitian_part();
    Ok(())
}

/// Decodes a measured block under its current key: `c ⊕ x(P)` then classical decoding.
pub fn decode_record(trap: &TrapCode, key: &AuthKey, record: &MeasurementRecord) -> Result<(bool, bool), GadgetError> {
    let mask = BitVec::from_bools(&key.pauli(&record.block)?.x_bits());
    let c = record.bits();
    if c.len() != mask.len() {
        return Err(GadgetError::Transcript(format!("record for {} has {} bits", record.block, c.len())));
    }
    let r = trap.decode(&c.xor(&mask), record.basis)?;
    Ok((r.a, r.accept()))
}

/// Replays the verifier's side of a gadget from the key held before it started.
///
/// Works on partial T transcripts: with only the first record, the update carries the
/// correction to send back.
pub fn verifier_key_update(trap: &TrapCode, key: &AuthKey, spec: &GadgetSpec, transcript: &GadgetTranscript) -> Result<KeyUpdate, GadgetError> {
    let mut key = key.clone();
    let mut a_bits = Vec::new();
    let mut syndrome_ok = Vec::new();
    let mut correction = None;
    let bad = || GadgetError::Transcript(spec.gate.name().to_string());
    let tb = &transcript.target_blocks;
    let mb = &transcript.magic_blocks;
    let rec = &transcript.records;
    let decode = |key: &AuthKey, i: usize, a_bits: &mut Vec<bool>, ok: &mut Vec<bool>| -> Result<Option<bool>, GadgetError> {
        let Some(r) = rec.get(i) else { return Ok(None) };
        let (a, accept) = decode_record(trap, key, r)?;
        a_bits.push(a);
        ok.push(accept);
        Ok(Some(a))
    };
    match spec.gate {
        Gate::X(_) | Gate::Y(_) | Gate::Z(_) => {
            let logical = match spec.gate {
                Gate::X(_) => trap.logical_x(),
                Gate::Y(_) => trap.logical_y(),
                _ => trap.logical_z(),
            };
            key_times(&mut key, tb.first().ok_or_else(bad)?, &logical)?;
        }
        Gate::Cnot(..) => {
            if tb.len() != 2 {
                return Err(bad());
            }
            key_cnot(&mut key, &tb[0], &tb[1])?;
        }
        Gate::K(_) => {
            let (w, m) = (tb.first().ok_or_else(bad)?, mb.first().ok_or_else(bad)?);
            key_cnot(&mut key, m, w)?;
            if decode(&key, 0, &mut a_bits, &mut syndrome_ok)? == Some(true) {
                key_times(&mut key, m, &trap.logical_y())?;
            }
        }
        Gate::T(_) => {
            if mb.len() != 2 {
                return Err(bad());
            }
            let (w, t, k) = (tb.first().ok_or_else(bad)?, &mb[0], &mb[1]);
            key_cnot(&mut key, t, w)?;
            let a = decode(&key, 0, &mut a_bits, &mut syndrome_ok)?;
            correction = a;
            match a {
                Some(true) => {
                    key_times(&mut key, t, &trap.logical_x())?;
                    key_cnot(&mut key, k, t)?;
                    if decode(&key, 1, &mut a_bits, &mut syndrome_ok)? == Some(true) {
                        key_times(&mut key, k, &trap.logical_y())?;
                    }
                }
                Some(false) => {
                    // the unused K-magic is measured only to be checked
                    decode(&key, 1, &mut a_bits, &mut syndrome_ok)?;
                }
                None => {}
            }
        }
        Gate::H(_) => {
            if mb.len() != 2 {
                return Err(bad());
            }
            let (w, m1, m2) = (tb.first().ok_or_else(bad)?, &mb[0], &mb[1]);
            key_cnot(&mut key, w, m2)?;
            key_hadamard(&mut key, w)?;
            let b2 = decode(&key, 0, &mut a_bits, &mut syndrome_ok)?;
            let bw = decode(&key, 1, &mut a_bits, &mut syndrome_ok)?;
            if b2 == Some(true) {
                key_times(&mut key, m1, &trap.logical_z())?;
            }
            if bw == Some(true) {
                key_times(&mut key, m1, &trap.logical_x())?;
            }
        }
    }
    let cheating = syndrome_ok.iter().any(|ok| !ok);
    Ok(KeyUpdate { key, a_bits, syndrome_ok, correction, cheating })
}

#[derive(Clone, Debug)]
struct MagicEntry {
    kind: MagicKind,
    name: String,
    blocks: Vec<String>,
    consumed: bool,
}

/// Outcome of measuring an authenticated register.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureOutcome {
    pub c_bits: String,
    pub a: bool,
    pub accept: bool,
}

/// Record of running a circuit through gadgets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedRun {
    pub transcripts: Vec<GadgetTranscript>,
    pub two_way_rounds: usize,
    pub cheating: bool,
}

/// Attacker and verifier sharing one process.
pub struct Session<B: Backend> {
    family: TrapFamily,
    trap: TrapCode,
    key: AuthKey,
    state: B,
    blocks: BTreeMap<String, Vec<usize>>,
    registers: Vec<String>,
    location: BTreeMap<String, String>,
    measured: Vec<String>,
    magic: Vec<MagicEntry>,
    log: Vec<Message>,
    transcripts: Vec<GadgetTranscript>,
    cheating: bool,
    key_rng: ChaCha20Rng,
    outcome_rng: ChaCha20Rng,
}

impl<B: Backend> Session<B> {
    /// New session over `state` (normally empty); the code key is drawn from the key stream of `seed`.
    pub fn new(family: TrapFamily, state: B, seed: u64) -> Self {
        let mut key_rng = stream_rng(seed, Stream::Keys);
        let trap = family.sample(&mut key_rng);
        let key = AuthKey { permutation: trap.permutation().clone(), paulis: BTreeMap::new() };
        Session {
            family,
            trap,
            key,
            state,
            blocks: BTreeMap::new(),
            registers: Vec::new(),
            location: BTreeMap::new(),
            measured: Vec::new(),
            magic: Vec::new(),
            log: Vec::new(),
            transcripts: Vec::new(),
            cheating: false,
            key_rng,
            outcome_rng: stream_rng(seed, Stream::Outcomes),
        }
    }

    /// Replaces the outcome generator, e.g. to share one stream across sessions.
    pub fn with_outcome_seed(mut self, seed: u64) -> Self {
        self.outcome_rng = ChaCha20Rng::seed_from_u64(seed);
        self
    }

    pub fn trap(&self) -> &TrapCode {
        &self.trap
    }

    pub fn key(&self) -> &AuthKey {
        &self.key
    }

    pub fn state(&self) -> &B {
        &self.state
    }

    /// Attacker-side access, for deviations.
    pub fn state_mut(&mut self) -> &mut B {
        &mut self.state
    }

    pub fn log(&self) -> &[Message] {
        &self.log
    }

    pub fn transcripts(&self) -> &[GadgetTranscript] {
        &self.transcripts
    }

    pub fn cheating_detected(&self) -> bool {
        self.cheating
    }

    pub fn registers(&self) -> &[String] {
        &self.registers
    }

    pub fn block(&self, name: &str) -> Result<&[usize], GadgetError> {
        self.blocks.get(name).map(|v| v.as_slice()).ok_or_else(|| GadgetError::UnknownRegister(name.to_string()))
    }

    /// Block currently holding logical register `reg`.
    pub fn block_of(&self, reg: &str) -> Result<&str, GadgetError> {
        if self.measured.iter().any(|m| m == reg) {
            return Err(GadgetError::Measured(reg.to_string()));
        }
        self.location.get(reg).map(|s| s.as_str()).ok_or_else(|| GadgetError::UnknownRegister(reg.to_string()))
    }

    fn new_blocks(&mut self, names: &[String], prep: &[Gate]) -> Result<(), GadgetError> {
        for name in names {
            if self.blocks.contains_key(name) {
                return Err(GadgetError::Duplicate(name.clone()));
            }
        }
        let len = self.family.block_len();
        let d = self.trap.data_phys();
        let mut data_qubits = Vec::new();
        for name in names {
            let qs: Vec<usize> = self.state.append_qubits(len)?.collect();
            data_qubits.push(qs[d]);
            self.blocks.insert(name.clone(), qs);
            let p = PauliOperator::random(len, &mut self.key_rng);
            self.key.paulis.insert(name.clone(), p);
        }
        for g in prep {
            self.state.apply_gate(&g.remap(|i| data_qubits[i]))?;
        }
        for name in names {
            let qs = self.blocks[name].clone();
            authenticate_register(&self.family, &self.key, name, &mut self.state, &qs)?;
        }
        Ok(())
    }

    /// Authenticates a fresh data register prepared by `prep` (gates on qubit 0). Returns its index.
    pub fn add_data_register(&mut self, name: &str, prep: &[Gate]) -> Result<usize, GadgetError> {
        self.new_blocks(&[name.to_string()], prep)?;
        self.registers.push(name.to_string());
        self.location.insert(name.to_string(), name.to_string());
        Ok(self.registers.len() - 1)
    }

    /// Authenticates several data registers prepared jointly by `prep` (gate qubit `i` is register `i`).
    pub fn add_joint_registers(&mut self, names: &[&str], prep: &[Gate]) -> Result<Vec<usize>, GadgetError> {
        let owned: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        self.new_blocks(&owned, prep)?;
        let mut idx = Vec::new();
        for n in owned {
            self.registers.push(n.clone());
            self.location.insert(n.clone(), n);
            idx.push(self.registers.len() - 1);
        }
        Ok(idx)
    }

    /// Authenticates a magic register. H-magic uses blocks `name/0` (output) and `name/1`.
    pub fn add_magic(&mut self, name: &str, kind: MagicKind) -> Result<(), GadgetError> {
        let blocks: Vec<String> = match kind {
            MagicKind::H => vec![format!("{name}/0"), format!("{name}/1")],
            _ => vec![name.to_string()],
        };
        let prep = kind.preparation(&(0..kind.width()).collect::<Vec<_>>());
        self.new_blocks(&blocks, &prep)?;
        self.magic.push(MagicEntry { kind, name: name.to_string(), blocks, consumed: false });
        Ok(())
    }

    fn available(&self) -> [usize; 3] {
        let mut a = [0; 3];
        for m in self.magic.iter().filter(|m| !m.consumed) {
            a[m.kind as usize] += 1;
        }
        a
    }

    fn take_magic(&mut self, kind: MagicKind) -> Result<Vec<String>, GadgetError> {
        let entry = self.magic.iter_mut().find(|m| m.kind == kind && !m.consumed).ok_or(GadgetError::MissingMagic(kind))?;
        entry.consumed = true;
        Ok(entry.blocks.clone())
    }

    /// Uses the named magic register for the next gadget of its kind instead of the declaration order.
    pub fn consume_named_magic(&mut self, name: &str) -> Result<Vec<String>, GadgetError> {
        let entry = self.magic.iter_mut().find(|m| m.name == name).ok_or_else(|| GadgetError::UnknownRegister(name.to_string()))?;
        if entry.consumed {
            return Err(GadgetError::MagicReused(name.to_string()));
        }
        entry.consumed = true;
        Ok(entry.blocks.clone())
    }

    fn bitwise_cnot(&mut self, control: &str, target: &str) -> Result<(), GadgetError> {
        let c = self.block(control)?.to_vec();
        let t = self.block(target)?.to_vec();
        for (a, b) in c.into_iter().zip(t) {
            self.state.apply_gate(&Gate::Cnot(a, b))?;
        }
        Ok(())
    }

    fn bitwise_measure(&mut self, block: &str, basis: Basis) -> Result<MeasurementRecord, GadgetError> {
        let qs = self.block(block)?.to_vec();
        if basis == Basis::Hadamard {
            for &q in &qs {
                self.state.apply_gate(&Gate::H(q))?;
            }
        }
        let m = measure_computational(&mut self.state, &qs, &mut self.outcome_rng)?;
        let c_bits: String = m.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        self.log.push(Message::AttackerToVerifier { block: block.to_string(), c_bits: c_bits.clone() });
        Ok(MeasurementRecord { block: block.to_string(), basis, c_bits })
    }

    fn register_name(&self, idx: usize) -> Result<String, GadgetError> {
        self.registers.get(idx).cloned().ok_or_else(|| GadgetError::UnknownRegister(format!("#{idx}")))
    }

    /// Runs one gadget: attacker operations, messages, and the verifier's key update.
    pub fn apply_gadget(&mut self, spec: &GadgetSpec) -> Result<GadgetTranscript, GadgetError> {
        let regs: Vec<String> = spec.gate.qubits().into_iter().map(|i| self.register_name(i)).collect::<Result<_, _>>()?;
        let target_blocks: Vec<String> = regs.iter().map(|r| self.block_of(r).map(str::to_string)).collect::<Result<_, _>>()?;
        let key_before = self.key.clone();
        let mut tr = GadgetTranscript {
            gate: spec.gate.name().to_string(),
            register: regs.join(","),
            target_blocks: target_blocks.clone(),
            magic_blocks: Vec::new(),
            records: Vec::new(),
            a_bits: Vec::new(),
            syndrome_ok: Vec::new(),
            correction: None,
        };
        let w = &target_blocks[0];
        match spec.gate {
            Gate::X(_) | Gate::Y(_) | Gate::Z(_) => {}
            Gate::Cnot(..) => self.bitwise_cnot(&target_blocks[0], &target_blocks[1])?,
            Gate::K(_) => {
                let m = self.take_magic(MagicKind::K)?.remove(0);
                tr.magic_blocks.push(m.clone());
                self.bitwise_cnot(&m, w)?;
                tr.records.push(self.bitwise_measure(w, Basis::Computational)?);
                self.location.insert(regs[0].clone(), m);
            }
            Gate::T(_) => {
                let t = self.take_magic(MagicKind::T)?.remove(0);
                let k = self.take_magic(MagicKind::K)?.remove(0);
                tr.magic_blocks = vec![t.clone(), k.clone()];
                self.bitwise_cnot(&t, w)?;
                tr.records.push(self.bitwise_measure(w, Basis::Computational)?);
                let partial = verifier_key_update(&self.trap, &key_before, spec, &tr)?;
                let corr = partial.correction.expect("first record decoded");
                self.log.push(Message::VerifierToAttacker { correction: corr });
                if corr {
                    self.bitwise_cnot(&k, &t)?;
                    tr.records.push(self.bitwise_measure(&t, Basis::Computational)?);
                    self.location.insert(regs[0].clone(), k);
                } else {
                    tr.records.push(self.bitwise_measure(&k, Basis::Computational)?);
                    self.location.insert(regs[0].clone(), t);
                }
            }
            Gate::H(_) => {
                let mb = self.take_magic(MagicKind::H)?;
                tr.magic_blocks = mb.clone();
                self.bitwise_cnot(w, &mb[1])?;
                tr.records.push(self.bitwise_measure(&mb[1], Basis::Computational)?);
                tr.records.push(self.bitwise_measure(w, Basis::Hadamard)?);
                self.location.insert(regs[0].clone(), mb[0].clone());
            }
        }
        let upd = verifier_key_update(&self.trap, &key_before, spec, &tr)?;
        tr.a_bits = upd.a_bits;
        tr.syndrome_ok = upd.syndrome_ok;
        tr.correction = upd.correction;
        self.cheating |= upd.cheating;
        self.key = upd.key;
        self.transcripts.push(tr.clone());
        Ok(tr)
    }

    /// Attacker measures every qubit of `reg`; the verifier unmasks and decodes.
    pub fn authenticated_measure(&mut self, reg: &str) -> Result<MeasureOutcome, GadgetError> {
        let block = self.block_of(reg)?.to_string();
        let rec = self.bitwise_measure(&block, Basis::Computational)?;
        let (a, accept) = decode_record(&self.trap, &self.key, &rec)?;
        self.cheating |= !accept;
        self.measured.push(reg.to_string());
        Ok(MeasureOutcome { c_bits: rec.c_bits, a, accept })
    }

    /// Returns `reg` to the verifier, who undoes key and code and checks the traps.
    pub fn verify_register(&mut self, reg: &str) -> Result<Verification, GadgetError> {
        let block = self.block_of(reg)?.to_string();
        let qs = self.block(&block)?.to_vec();
        let v = verify_and_decode(&self.family, &self.key, &block, &mut self.state, &qs, &mut self.outcome_rng)?;
        self.cheating |= !v.accept;
        self.measured.push(reg.to_string());
        Ok(v)
    }

    /// Runs `circuit` (gates on register indices), consuming magic in declaration order.
    pub fn run_encoded_circuit(&mut self, circuit: &[Gate]) -> Result<EncodedRun, GadgetError> {
        let mut needed = [0usize; 3];
        for g in circuit {
            match g {
                Gate::K(_) => needed[MagicKind::K as usize] += 1,
                Gate::T(_) => {
                    needed[MagicKind::T as usize] += 1;
                    needed[MagicKind::K as usize] += 1;
                }
                Gate::H(_) => needed[MagicKind::H as usize] += 1,
                _ => {}
            }
        }
        let available = self.available();
        if needed != available {
            return Err(GadgetError::Inventory { needed, available });
        }
        let start = self.transcripts.len();
        let rounds_before = self.two_way_rounds();
        for g in circuit {
            self.apply_gadget(&GadgetSpec::for_gate(*g))?;
        }
        Ok(EncodedRun {
            transcripts: self.transcripts[start..].to_vec(),
            two_way_rounds: self.two_way_rounds() - rounds_before,
            cheating: self.cheating,
        })
    }

    pub fn two_way_rounds(&self) -> usize {
        self.log.iter().filter(|m| matches!(m, Message::VerifierToAttacker { .. })).count()
    }

    /// Applies `p` (a Pauli on the block positions) to the block currently holding `reg`.
    pub fn attack_register(&mut self, reg: &str, p: &PauliOperator) -> Result<(), GadgetError> {
        let block = self.block_of(reg)?.to_string();
        self.attack_block(&block, p)
    }

    pub fn attack_block(&mut self, block: &str, p: &PauliOperator) -> Result<(), GadgetError> {
        let qs = self.block(block)?.to_vec();
        if p.n() != qs.len() {
            return Err(TrapError::Size { expected: qs.len(), got: p.n() }.into());
        }
        let full = p.embed(self.state.n(), &qs);
        self.state.apply_pauli(&full)?;
        Ok(())
    }

    /// Logical single-qubit Pauli `kind` on physical block positions.
    pub fn logical(&self, kind: PauliKind) -> PauliOperator {
        match kind {
            PauliKind::I => PauliOperator::identity(self.family.block_len()),
            PauliKind::X => self.trap.logical_x(),
            PauliKind::Y => self.trap.logical_y(),
            PauliKind::Z => self.trap.logical_z(),
        }
    }
}

#[cfg(test)]
mod tests;
