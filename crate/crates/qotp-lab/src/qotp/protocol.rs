//! Sender message preparation and the receiver's side of the protocol.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::plan::{magic_blocks, names, PlanState, StepBlocks};
use super::teleport::{bell_measure, pauli_bits, pauli_from_bits, prepare_pair, PairKind};
use super::verifier::{SenderKeys, Verifier};
use super::{CompiledProgram, QotpError};
use crate::cotp::{brotp_compile, BrOtpIdeal, Carried, Gf2k, RoundAnswer, RoundOracle};
use crate::gf2::BitVec;
use crate::pauli::{Gate, PauliOperator};
use crate::sim::{measure_computational, Backend, QuantumState};
use crate::trap::{authenticate_register, Basis, TrapFamily};

/// Receiver access to the BR-OTP. The state is passed so a simulator can act on its own
/// registers while answering.
pub trait QotpOracle {
    fn rounds(&self) -> usize;
    fn query(
        &mut self,
        i: usize,
        b: &BitVec,
        carried: Option<&Carried>,
        state: &mut QuantumState,
        rng: &mut dyn RngCore,
    ) -> Result<RoundAnswer, QotpError>;
}

impl<T: RoundOracle> QotpOracle for T {
    fn rounds(&self) -> usize {
        RoundOracle::rounds(self)
    }

    fn query(&mut self, i: usize, b: &BitVec, carried: Option<&Carried>, _: &mut QuantumState, _: &mut dyn RngCore) -> Result<RoundAnswer, QotpError> {
        RoundOracle::query(self, i, b, carried).map_err(QotpError::Abort)
    }
}

/// How the BR-OTP is realised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrOtpMode {
    /// OTM-compiled with one-time pads and MACs over GF(2^κ).
    Compiled { kappa: u32 },
    /// The ideal bounded-round functionality.
    Ideal,
}

/// Qubits of every message register.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageLayout {
    pub blocks: BTreeMap<String, Vec<usize>>,
    pub b_in: Vec<usize>,
    pub b_out: Vec<usize>,
    /// Decoded syndrome qubits of the output teleportation, kept by the sender.
    pub discarded: Vec<usize>,
}

impl MessageLayout {
    pub fn block(&self, name: &str) -> Result<&[usize], QotpError> {
        self.blocks.get(name).map(|v| v.as_slice()).ok_or_else(|| QotpError::Wire(format!("block {name}")))
    }
}

/// The environment's registers: inputs `A` (given to the sender), `B` (receiver), and a
/// purification `W`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvRegisters {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub w: Vec<usize>,
}

pub struct SenderMessage {
    pub layout: MessageLayout,
    pub oracle: Box<dyn QotpOracle + Send>,
}

impl std::fmt::Debug for SenderMessage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SenderMessage").field("layout", &self.layout).finish_non_exhaustive()
    }
}

/// Protocol parameters shared by both parties.
#[derive(Clone, Debug)]
pub struct QotpSetup {
    pub family: TrapFamily,
    pub program: Arc<CompiledProgram>,
    pub mode: BrOtpMode,
}

impl QotpSetup {
    pub fn new(family: TrapFamily, program: CompiledProgram, mode: BrOtpMode) -> Self {
        QotpSetup { family, program: Arc::new(program), mode }
    }

    /// Qubits the message occupies, not counting the environment.
    pub fn message_qubits(&self) -> usize {
        let p = &self.program;
        let blocks = p.registers.a + p.registers.b + (p.width() - p.registers.a - p.registers.b) + magic_blocks(p).iter().map(|(_, b)| b.len()).sum::<usize>();
        let len = self.family.block_len();
        blocks * len + p.registers.b * (1 + 2 * len)
    }
}

fn data_block(state: &mut QuantumState, len: usize, d: usize, data: Option<usize>) -> Result<Vec<usize>, QotpError> {
    let fresh: Vec<usize> = state.append_qubits(len - usize::from(data.is_some()))?.collect();
    Ok(match data {
        Some(q) => {
            let mut v = fresh;
            v.insert(d, q);
            v
        }
        None => fresh,
    })
}

/// What the sender puts in the data registers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Contents<'a> {
    Real { a: &'a [usize] },
    Dummy,
}

/// Allocates and authenticates `Ã`, `Ẽ` and `M̃`.
pub(crate) fn prepare_static_blocks(
    setup: &QotpSetup,
    keys: &SenderKeys,
    state: &mut QuantumState,
    contents: Contents<'_>,
    control_on: bool,
    layout: &mut MessageLayout,
) -> Result<(), QotpError> {
    let fam = &setup.family;
    let p = &setup.program;
    let trap = fam.with_permutation(keys.permutation.clone())?;
    let key = keys.auth_key();
    let len = fam.block_len();
    let d = trap.data_phys();
    for i in 0..p.registers.a {
        let data = match contents {
            Contents::Real { a } => Some(*a.get(i).ok_or_else(|| QotpError::Wire(format!("A wire {i}")))?),
            Contents::Dummy => None,
        };
        let block = data_block(state, len, d, data)?;
        authenticate_register(fam, &key, &names::a(i), state, &block)?;
        layout.blocks.insert(names::a(i), block);
    }
    for (j, wire) in p.e_wires().enumerate() {
        let block = data_block(state, len, d, None)?;
        if wire == p.control && control_on {
            state.apply_gate(&Gate::X(block[d]))?;
        }
        authenticate_register(fam, &key, &names::e(j), state, &block)?;
        layout.blocks.insert(names::e(j), block);
    }
    for (kind, blocks) in magic_blocks(p) {
        let qs: Vec<Vec<usize>> = blocks.iter().map(|_| data_block(state, len, d, None)).collect::<Result<_, _>>()?;
        let data: Vec<usize> = qs.iter().map(|b| b[d]).collect();
        for g in kind.preparation(&data) {
            state.apply_gate(&g)?;
        }
        for (name, b) in blocks.into_iter().zip(qs) {
            authenticate_register(fam, &key, &name, state, &b)?;
            layout.blocks.insert(name, b);
        }
    }
    Ok(())
}

/// Allocates `(B̃_out, B_out)`: EPR pairs, `S` and then `E*` on the far halves.
pub(crate) fn prepare_output_pairs(setup: &QotpSetup, keys: &SenderKeys, state: &mut QuantumState, layout: &mut MessageLayout) -> Result<(), QotpError> {
    let trap = setup.family.with_permutation(keys.permutation.clone())?;
    for i in 0..setup.program.registers.b {
        let pair = prepare_pair(state, &PairKind::ThroughDeauth { trap: trap.clone(), key: keys.out[i].clone() }, 1)?;
        layout.b_out.extend(&pair.output);
        layout.discarded.extend(pair.far.iter().filter(|q| !pair.output.contains(q)));
        layout.blocks.insert(names::out(i), pair.near);
    }
    Ok(())
}

pub(crate) fn make_oracle<R: Rng + ?Sized>(verifier: &Arc<Verifier>, mode: BrOtpMode, t_override: Option<BitVec>, rng: &mut R) -> Result<Box<dyn QotpOracle + Send>, QotpError> {
    let spec = verifier.brotp_spec(t_override);
    Ok(match mode {
        BrOtpMode::Compiled { kappa } => Box::new(brotp_compile(&spec, BitVec::zeros(0), Gf2k::new(kappa)?, rng)),
        BrOtpMode::Ideal => Box::new(BrOtpIdeal::new(spec, BitVec::zeros(0))),
    })
}

/// Builds the whole message on `state` under `keys`. The sender's `A` input is taken
/// from the environment qubits `a`.
pub fn prepare_sender_message<R: Rng + ?Sized>(
    setup: &QotpSetup,
    keys: &SenderKeys,
    state: &mut QuantumState,
    a: &[usize],
    rng: &mut R,
) -> Result<(SenderMessage, Arc<Verifier>), QotpError> {
    prepare_with_control(setup, keys, state, a, true, rng)
}

/// As [`prepare_sender_message`], with the control qubit value as a test knob.
pub fn prepare_with_control<R: Rng + ?Sized>(
    setup: &QotpSetup,
    keys: &SenderKeys,
    state: &mut QuantumState,
    a: &[usize],
    control_on: bool,
    rng: &mut R,
) -> Result<(SenderMessage, Arc<Verifier>), QotpError> {
    let p = &setup.program;
    if a.len() != p.registers.a {
        return Err(QotpError::Wire(format!("sender input has {} qubits, program declares {}", a.len(), p.registers.a)));
    }
    let verifier = Arc::new(Verifier::new(&setup.family, Arc::clone(p), keys.clone())?);
    let mut layout = MessageLayout::default();
    let trap = verifier.trap().clone();
    prepare_static_blocks(setup, keys, state, Contents::Real { a }, control_on, &mut layout)?;
    for i in 0..p.registers.b {
        let key = keys.paulis[&names::b(i)].clone();
        let pair = prepare_pair(state, &PairKind::ThroughAuth { trap: trap.clone(), key }, 1)?;
        layout.b_in.extend(&pair.near);
        layout.blocks.insert(names::b(i), pair.far);
    }
    prepare_output_pairs(setup, keys, state, &mut layout)?;
    let oracle = make_oracle(&verifier, setup.mode, None, rng)?;
    Ok((SenderMessage { layout, oracle }, verifier))
}

/// Receiver-side view handed to adversary callbacks.
pub struct AttackContext<'a> {
    pub state: &'a mut QuantumState,
    pub layout: &'a MessageLayout,
    pub env: &'a EnvRegisters,
    /// Current block of every wire of the controlled circuit.
    pub location: &'a [String],
}

impl AttackContext<'_> {
    pub fn apply_to(&mut self, qubits: &[usize], p: &PauliOperator) -> Result<(), QotpError> {
        if qubits.len() != p.n() {
            return Err(QotpError::Wire(format!("{}-qubit attack on {} qubits", p.n(), qubits.len())));
        }
        let full = p.embed(self.state.n(), qubits);
        self.state.apply_pauli(&full)?;
        Ok(())
    }

    pub fn apply_to_block(&mut self, block: &str, p: &PauliOperator) -> Result<(), QotpError> {
        let qs = self.layout.block(block)?.to_vec();
        self.apply_to(&qs, p)
    }
}

/// Deviations in the normal form: an operation on receipt, one before each gadget, one
/// after each answer, one before the output teleportation.
pub trait Adversary {
    fn on_message(&mut self, _ctx: &mut AttackContext<'_>) -> Result<(), QotpError> {
        Ok(())
    }
    fn before_gadget(&mut self, _step: usize, _blocks: &StepBlocks, _ctx: &mut AttackContext<'_>) -> Result<(), QotpError> {
        Ok(())
    }
    fn after_round(&mut self, _round: usize, _answer: &BitVec, _ctx: &mut AttackContext<'_>) -> Result<(), QotpError> {
        Ok(())
    }
    fn before_teleport_out(&mut self, _ctx: &mut AttackContext<'_>) -> Result<(), QotpError> {
        Ok(())
    }
}

/// Follows the protocol.
#[derive(Clone, Copy, Debug, Default)]
pub struct Honest;

impl Adversary for Honest {}

/// Where a Pauli attack lands.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackTarget {
    /// A message block, right after receipt.
    Block(String),
    /// The environment's purification.
    Purification,
}

/// Applies a fixed Pauli on receipt.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliAttack {
    pub target: AttackTarget,
    pub pauli: PauliOperator,
}

impl Adversary for PauliAttack {
    fn on_message(&mut self, ctx: &mut AttackContext<'_>) -> Result<(), QotpError> {
        match &self.target {
            AttackTarget::Block(b) => ctx.apply_to_block(b, &self.pauli),
            AttackTarget::Purification => {
                let w = ctx.env.w.clone();
                ctx.apply_to(&w, &self.pauli)
            }
        }
    }
}

/// One BR-OTP exchange as the receiver saw it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub input: BitVec,
    pub answer: BitVec,
}

/// What the receiver ends with.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiverOutcome {
    pub t_in: BitVec,
    pub t_out: Vec<PauliOperator>,
    pub s_hat: Vec<PauliOperator>,
    pub rounds: Vec<RoundRecord>,
    /// Qubits of `B_out`, holding the output after `Ŝ`.
    pub output: Vec<usize>,
}

impl ReceiverOutcome {
    /// All classical data the receiver saw, in order.
    pub fn transcript_bits(&self) -> BitVec {
        self.rounds.iter().fold(BitVec::zeros(0), |acc, r| acc.concat(&r.input).concat(&r.answer))
    }
}

struct Channel<'a> {
    oracle: &'a mut dyn QotpOracle,
    carried: Option<Carried>,
    next: usize,
    rounds: Vec<RoundRecord>,
}

impl Channel<'_> {
    fn ask(&mut self, b: BitVec, state: &mut QuantumState, rng: &mut dyn RngCore) -> Result<BitVec, QotpError> {
        self.next += 1;
        let ans = self.oracle.query(self.next, &b, self.carried.as_ref(), state, rng)?;
        self.carried = ans.next;
        self.rounds.push(RoundRecord { round: self.next, input: b, answer: ans.m.clone() });
        Ok(ans.m)
    }
}

fn bitwise_cnot(state: &mut QuantumState, c: &[usize], t: &[usize]) -> Result<(), QotpError> {
    for (&a, &b) in c.iter().zip(t) {
        state.apply_gate(&Gate::Cnot(a, b))?;
    }
    Ok(())
}

fn bitwise_measure(state: &mut QuantumState, qs: &[usize], basis: Basis, rng: &mut dyn RngCore) -> Result<BitVec, QotpError> {
    if basis == Basis::Hadamard {
        for &q in qs {
            state.apply_gate(&Gate::H(q))?;
        }
    }
    Ok(BitVec::from_bools(&measure_computational(state, qs, rng)?.bits))
}

/// The receiver: teleport in, run the gadgets of `c-U` with the BR-OTP, teleport out
/// through de-authentication, apply `Ŝ`. Deviations come from `adversary`.
pub fn run_receiver(
    program: &CompiledProgram,
    message: &mut SenderMessage,
    state: &mut QuantumState,
    env: &EnvRegisters,
    adversary: &mut dyn Adversary,
    rng: &mut dyn RngCore,
) -> Result<ReceiverOutcome, QotpError> {
    let layout = message.layout.clone();
    let mut plan = PlanState::new(program);
    let mut ch = Channel { oracle: message.oracle.as_mut(), carried: None, next: 0, rounds: Vec::new() };
    macro_rules! ctx {
        () => {
            &mut AttackContext { state: &mut *state, layout: &layout, env, location: plan.location() }
        };
    }
    if env.b.len() != program.registers.b {
        return Err(QotpError::Wire(format!("receiver input has {} qubits, program declares {}", env.b.len(), program.registers.b)));
    }
    adversary.on_message(ctx!())?;
    let mut t_in = Vec::new();
    for (&b, &near) in env.b.iter().zip(&layout.b_in) {
        let t = bell_measure(state, &[b], &[near], rng)?;
        t_in.extend(pauli_bits(&t));
    }
    let t_in = BitVec::from_bools(&t_in);
    let a0 = ch.ask(t_in.clone(), state, rng)?;
    adversary.after_round(1, &a0, ctx!())?;
    for (idx, gate) in program.controlled.iter().enumerate() {
        let step = plan.begin(gate)?;
        if step.spec.magic.is_some() {
            adversary.before_gadget(idx, &step, ctx!())?;
        }
        let tb: Vec<Vec<usize>> = step.target_blocks.iter().map(|b| layout.block(b).map(<[usize]>::to_vec)).collect::<Result<_, _>>()?;
        let mb: Vec<Vec<usize>> = step.magic_blocks.iter().map(|b| layout.block(b).map(<[usize]>::to_vec)).collect::<Result<_, _>>()?;
        let measure_part = |state: &mut QuantumState, part: usize, corr: Option<bool>, rng: &mut dyn RngCore| -> Result<BitVec, QotpError> {
            let mut bits = BitVec::zeros(0);
            for (block, basis) in step.measured(part, corr) {
                bits = bits.concat(&bitwise_measure(state, layout.block(&block)?, basis, rng)?);
            }
            Ok(bits)
        };
        let mut correction = None;
        match gate {
            Gate::X(_) | Gate::Y(_) | Gate::Z(_) => {}
            Gate::Cnot(..) => bitwise_cnot(state, &tb[0], &tb[1])?,
            Gate::K(_) => {
                bitwise_cnot(state, &mb[0], &tb[0])?;
                let c = measure_part(state, 0, None, rng)?;
                let a = ch.ask(c, state, rng)?;
                adversary.after_round(ch.next, &a, ctx!())?;
            }
            Gate::H(_) => {
                bitwise_cnot(state, &tb[0], &mb[1])?;
                let c = measure_part(state, 0, None, rng)?;
                let a = ch.ask(c, state, rng)?;
                adversary.after_round(ch.next, &a, ctx!())?;
            }
            Gate::T(_) => {
                bitwise_cnot(state, &mb[0], &tb[0])?;
                let c = measure_part(state, 0, None, rng)?;
                let a = ch.ask(c, state, rng)?;
                let corr = a.len() == 1 && a.get(0);
                adversary.after_round(ch.next, &a, ctx!())?;
                if corr {
                    bitwise_cnot(state, &mb[1], &mb[0])?;
                }
                let c = measure_part(state, 1, Some(corr), rng)?;
                let a = ch.ask(c, state, rng)?;
                adversary.after_round(ch.next, &a, ctx!())?;
                correction = Some(corr);
            }
        }
        plan.finish(&step, correction);
    }
    adversary.before_teleport_out(ctx!())?;
    let mut t_out = Vec::new();
    for (i, wire) in program.registers.b_wires().enumerate() {
        let block = layout.block(&plan.location()[wire])?.to_vec();
        let near = layout.block(&names::out(i))?.to_vec();
        t_out.push(bell_measure(state, &block, &near, rng)?);
    }
    let bits: Vec<bool> = t_out.iter().flat_map(pauli_bits).collect();
    let s = ch.ask(BitVec::from_bools(&bits), state, rng)?;
    adversary.after_round(ch.next, &s, ctx!())?;
    let s = s.to_bools();
    let mut s_hat = Vec::new();
    for (i, &q) in layout.b_out.iter().enumerate() {
        let p = pauli_from_bits(s.get(2 * i..2 * i + 2).ok_or_else(|| QotpError::Contract("short final answer".into()))?);
        state.apply_pauli(&p.embed(state.n(), &[q]))?;
        s_hat.push(p);
    }
    Ok(ReceiverOutcome { t_in, t_out, s_hat, rounds: ch.rounds, output: layout.b_out.clone() })
}

/// [`run_receiver`] with no deviation.
pub fn honest_receiver_run(
    program: &CompiledProgram,
    message: &mut SenderMessage,
    state: &mut QuantumState,
    env: &EnvRegisters,
    rng: &mut dyn RngCore,
) -> Result<ReceiverOutcome, QotpError> {
    run_receiver(program, message, state, env, &mut Honest, rng)
}

/// Sender-side audit of a finished run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalKeyAudit {
    pub accept: bool,
    /// `Ŝ` recomputed from keys and transcript.
    pub formula: Vec<PauliOperator>,
    /// `Ŝ` returned by the BR-OTP.
    pub returned: Vec<PauliOperator>,
    pub matches: bool,
}

/// Recomputes `Ŝ` from the sender's keys and the receiver's round inputs.
pub fn audit_final_key(verifier: &Verifier, t_key: &BitVec, outcome: &ReceiverOutcome) -> Result<FinalKeyAudit, QotpError> {
    let inputs: Vec<BitVec> = outcome.rounds.iter().map(|r| r.input.clone()).collect();
    let replay = verifier.replay(t_key, &inputs)?;
    let formula = replay.final_key.ok_or_else(|| QotpError::Contract("transcript is incomplete".into()))?;
    let strip = |v: &[PauliOperator]| v.iter().map(PauliOperator::hermitian_part).collect::<Vec<_>>();
    let matches = strip(&formula) == strip(&outcome.s_hat);
    Ok(FinalKeyAudit { accept: !replay.cheating, formula, returned: outcome.s_hat.clone(), matches })
}
