//! Static block bookkeeping of the encoded controlled circuit, shared by receiver and sender.

use serde::{Deserialize, Serialize};

use super::{CompiledProgram, QotpError};
use crate::gadgets::GadgetSpec;
use crate::pauli::Gate;
use crate::sim::MagicKind;
use crate::trap::Basis;

/// Block names of the message.
pub mod names {
    pub fn a(i: usize) -> String {
        format!("A/{i}")
    }
    pub fn b(i: usize) -> String {
        format!("B/{i}")
    }
    pub fn e(i: usize) -> String {
        format!("E/{i}")
    }
    pub fn magic(j: usize) -> String {
        format!("M/{j}")
    }
    pub fn out(i: usize) -> String {
        format!("O/{i}")
    }
}

/// Initial block of every wire of the controlled circuit.
pub fn wire_blocks(p: &CompiledProgram) -> Vec<String> {
    let r = p.registers;
    (0..p.width())
        .map(|w| {
            if w < r.a {
                names::a(w)
            } else if w < r.a + r.b {
                names::b(w - r.a)
            } else {
                names::e(w - r.a - r.b)
            }
        })
        .collect()
}

/// Magic registers in declaration order, with their blocks.
pub fn magic_blocks(p: &CompiledProgram) -> Vec<(MagicKind, Vec<String>)> {
    p.magic_inventory()
        .into_iter()
        .enumerate()
        .map(|(j, kind)| {
            let name = names::magic(j);
            let blocks = match kind {
                MagicKind::H => vec![format!("{name}/0"), format!("{name}/1")],
                _ => vec![name],
            };
            (kind, blocks)
        })
        .collect()
}

/// Blocks touched by one gadget.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepBlocks {
    pub spec: GadgetSpec,
    pub target_blocks: Vec<String>,
    pub magic_blocks: Vec<String>,
}

impl StepBlocks {
    /// Blocks measured for BR-OTP round `part` of this gadget, in record order.
    /// The second T round depends on the correction sent back after the first.
    pub fn measured(&self, part: usize, correction: Option<bool>) -> Vec<(String, Basis)> {
        let w = self.target_blocks[0].clone();
        match (self.spec.gate, part) {
            (Gate::K(_), 0) | (Gate::T(_), 0) => vec![(w, Basis::Computational)],
            (Gate::T(_), 1) => {
                let b = if correction == Some(true) { &self.magic_blocks[0] } else { &self.magic_blocks[1] };
                vec![(b.clone(), Basis::Computational)]
            }
            (Gate::H(_), 0) => vec![(self.magic_blocks[1].clone(), Basis::Computational), (w, Basis::Hadamard)],
            _ => Vec::new(),
        }
    }
}

/// BR-OTP round roles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoundKind {
    TeleportIn,
    Gadget { step: usize, part: usize },
    TeleportOut,
}

/// Round roles with their input and output lengths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundLayout {
    pub kinds: Vec<RoundKind>,
    pub input_len: Vec<usize>,
    pub output_len: Vec<usize>,
}

impl RoundLayout {
    pub fn new(p: &CompiledProgram, block_len: usize) -> Self {
        let nb = p.registers.b;
        let mut kinds = vec![RoundKind::TeleportIn];
        let mut input_len = vec![2 * nb];
        let mut output_len = vec![0];
        for (step, g) in p.controlled.iter().enumerate() {
            let parts: &[(usize, usize)] = match g {
                Gate::K(_) => &[(1, 1)],
                Gate::H(_) => &[(2, 2)],
                Gate::T(_) => &[(1, 1), (1, 1)],
                _ => &[],
            };
            for (part, &(records, out)) in parts.iter().enumerate() {
                kinds.push(RoundKind::Gadget { step, part });
                input_len.push(records * block_len);
                output_len.push(out);
            }
        }
        kinds.push(RoundKind::TeleportOut);
        input_len.push(2 * block_len * nb);
        output_len.push(2 * nb);
        RoundLayout { kinds, input_len, output_len }
    }

    pub fn rounds(&self) -> usize {
        self.kinds.len()
    }

    /// Carried state: every input before the last round.
    pub fn state_len(&self) -> usize {
        self.input_len[..self.input_len.len() - 1].iter().sum()
    }
}

/// Where each wire currently lives, and which magic is still unused.
#[derive(Clone, Debug)]
pub struct PlanState {
    location: Vec<String>,
    magic: Vec<(MagicKind, Vec<String>, bool)>,
}

impl PlanState {
    pub fn new(p: &CompiledProgram) -> Self {
        PlanState { location: wire_blocks(p), magic: magic_blocks(p).into_iter().map(|(k, b)| (k, b, false)).collect() }
    }

    pub fn location(&self) -> &[String] {
        &self.location
    }

    fn take(&mut self, kind: MagicKind) -> Result<Vec<String>, QotpError> {
        let e = self
            .magic
            .iter_mut()
            .find(|(k, _, used)| *k == kind && !used)
            .ok_or_else(|| QotpError::Contract(format!("no unused {kind:?} magic")))?;
        e.2 = true;
        Ok(e.1.clone())
    }

    /// Blocks for the next gadget; consumes its magic.
    pub fn begin(&mut self, gate: &Gate) -> Result<StepBlocks, QotpError> {
        let target_blocks = gate
            .qubits()
            .iter()
            .map(|&w| self.location.get(w).cloned().ok_or_else(|| QotpError::Wire(format!("wire {w}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let magic_blocks = match gate {
            Gate::K(_) => self.take(MagicKind::K)?,
            Gate::T(_) => {
                let mut v = self.take(MagicKind::T)?;
                v.extend(self.take(MagicKind::K)?);
                v
            }
            Gate::H(_) => self.take(MagicKind::H)?,
            _ => Vec::new(),
        };
        Ok(StepBlocks { spec: GadgetSpec::for_gate(*gate), target_blocks, magic_blocks })
    }

    /// Moves the wire of a teleporting gadget to its output block.
    pub fn finish(&mut self, step: &StepBlocks, correction: Option<bool>) {
        let new = match step.spec.gate {
            Gate::K(_) | Gate::H(_) => step.magic_blocks[0].clone(),
            Gate::T(_) if correction == Some(true) => step.magic_blocks[1].clone(),
            Gate::T(_) => step.magic_blocks[0].clone(),
            _ => return,
        };
        let w = step.spec.gate.qubits()[0];
        self.location[w] = new;
    }
}
