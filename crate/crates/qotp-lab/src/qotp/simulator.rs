//! The simulator: a message built without the sender's input, answered with one call to
//! the ideal channel.

use std::sync::{Arc, Mutex};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::plan::names;
use super::protocol::{make_oracle, prepare_output_pairs, prepare_static_blocks, Contents, MessageLayout, QotpOracle, QotpSetup, SenderMessage};
use super::teleport::{bell_measure, pauli_bits, prepare_pair, PairKind};
use super::verifier::{SenderKeys, Verifier};
use super::QotpError;
use crate::cotp::{AbortReason, Carried, RoundAnswer};
use crate::gf2::BitVec;
use crate::pauli::{Gate, PauliOperator};
use crate::sim::{Backend, QuantumState};

use super::Registers;

/// One recorded use of the ideal channel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealCall {
    pub b: Vec<usize>,
    pub e: Vec<usize>,
}

/// Ideal access to `Φ(·) = Tr_E U(· ⊗ |0⟩⟨0|_E) U*`, with the sender's input wired in.
/// Usable at most once.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealChannel {
    registers: Registers,
    base: Vec<Gate>,
    a: Vec<usize>,
    log: Vec<IdealCall>,
}

impl IdealChannel {
    pub fn new(registers: Registers, base: Vec<Gate>, a: Vec<usize>) -> Result<Self, QotpError> {
        if a.len() != registers.a {
            return Err(QotpError::Wire(format!("sender input has {} qubits, channel declares {}", a.len(), registers.a)));
        }
        Ok(IdealChannel { registers, base, a, log: Vec::new() })
    }

    /// Applies `U` to the sender's input, `b`, and a fresh `E`.
    pub fn call(&mut self, state: &mut QuantumState, b: &[usize]) -> Result<(), QotpError> {
        if !self.log.is_empty() {
            return Err(QotpError::Contract("ideal channel already used".into()));
        }
        if b.len() != self.registers.b {
            return Err(QotpError::Wire(format!("channel called on {} qubits, expects {}", b.len(), self.registers.b)));
        }
        let e: Vec<usize> = state.append_qubits(self.registers.e)?.collect();
        let wires: Vec<usize> = self.a.iter().chain(b).chain(&e).copied().collect();
        for g in &self.base {
            state.apply_gate(&g.remap(|w| wires[w]))?;
        }
        self.log.push(IdealCall { b: b.to_vec(), e });
        Ok(())
    }

    pub fn calls(&self) -> &[IdealCall] {
        &self.log
    }
}

/// Answers the receiver's BR-OTP queries. Round 1 undoes `T^in` on the simulator's half,
/// calls the channel, teleports the result into the authenticated input block and starts a
/// BR-OTP keyed to the resulting `T^sim`.
pub struct SimulatorOracle {
    setup: QotpSetup,
    verifier: Arc<Verifier>,
    channel: Arc<Mutex<IdealChannel>>,
    s_in: Vec<usize>,
    s_out: Vec<Vec<usize>>,
    inner: Option<Box<dyn QotpOracle + Send>>,
    started: bool,
    rng: ChaCha8Rng,
    t_sim: Option<BitVec>,
}

impl SimulatorOracle {
    /// `T^sim`, once round 1 has run.
    pub fn t_sim(&self) -> Option<&BitVec> {
        self.t_sim.as_ref()
    }

    fn start(&mut self, b: &BitVec, state: &mut QuantumState, rng: &mut dyn RngCore) -> Result<(), QotpError> {
        let nb = self.setup.program.registers.b;
        let bits = b.to_bools();
        for (i, &q) in self.s_in.iter().enumerate() {
            let x = bits.get(2 * i).copied().unwrap_or(false);
            let z = bits.get(2 * i + 1).copied().unwrap_or(false);
            let t = PauliOperator::from_bits(&[x], &[z], 0)?;
            state.apply_pauli(&t.embed(state.n(), &[q]))?;
        }
        self.channel.lock().expect("channel lock").call(state, &self.s_in)?;
        let mut t_sim = Vec::with_capacity(2 * nb);
        for (i, &q) in self.s_in.iter().enumerate() {
            let t = bell_measure(state, &[q], &self.s_out[i], rng)?;
            t_sim.extend(pauli_bits(&t));
        }
        let t_sim = BitVec::from_bools(&t_sim);
        self.inner = Some(make_oracle(&self.verifier, self.setup.mode, Some(t_sim.clone()), &mut self.rng)?);
        self.t_sim = Some(t_sim);
        Ok(())
    }
}

impl QotpOracle for SimulatorOracle {
    fn rounds(&self) -> usize {
        self.verifier.layout().rounds()
    }

    fn query(&mut self, i: usize, b: &BitVec, carried: Option<&Carried>, state: &mut QuantumState, rng: &mut dyn RngCore) -> Result<RoundAnswer, QotpError> {
        if i == 1 && !self.started {
            self.started = true;
            self.start(b, state, rng)?;
        }
        match self.inner.as_mut() {
            Some(o) => o.query(i, b, carried, state, rng),
            None if self.started => Err(QotpError::Abort(AbortReason::Absorbed)),
            None => Err(QotpError::Abort(AbortReason::OutOfOrder)),
        }
    }
}

/// The simulated message: dummy `Ã`, control off, and a plain pair in place of the
/// authenticated input teleportation; the channel is reached only through the BR-OTP.
pub fn prepare_simulated_message(
    setup: &QotpSetup,
    keys: &SenderKeys,
    state: &mut QuantumState,
    channel: Arc<Mutex<IdealChannel>>,
    seed: u64,
) -> Result<(SenderMessage, Arc<Verifier>), QotpError> {
    let p = &setup.program;
    let verifier = Arc::new(Verifier::new(&setup.family, Arc::clone(p), keys.clone())?);
    let trap = verifier.trap().clone();
    let mut layout = MessageLayout::default();
    prepare_static_blocks(setup, keys, state, Contents::Dummy, false, &mut layout)?;
    let mut s_in = Vec::new();
    let mut s_out = Vec::new();
    for i in 0..p.registers.b {
        let plain = prepare_pair(state, &PairKind::Plain, 1)?;
        layout.b_in.extend(&plain.near);
        s_in.extend(&plain.far);
        let key = keys.paulis[&names::b(i)].clone();
        let auth = prepare_pair(state, &PairKind::ThroughAuth { trap: trap.clone(), key }, 1)?;
        s_out.push(auth.near);
        layout.blocks.insert(names::b(i), auth.far);
    }
    prepare_output_pairs(setup, keys, state, &mut layout)?;
    let oracle = SimulatorOracle {
        setup: setup.clone(),
        verifier: Arc::clone(&verifier),
        channel,
        s_in,
        s_out,
        inner: None,
        started: false,
        rng: ChaCha8Rng::seed_from_u64(seed),
        t_sim: None,
    };
    Ok((SenderMessage { layout, oracle: Box::new(oracle) }, verifier))
}
