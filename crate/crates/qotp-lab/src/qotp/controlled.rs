//! Controlled forms of the universal gates and compilation of a channel into `c-U`.

use serde::{Deserialize, Serialize};

use super::QotpError;
use crate::pauli::Gate;
use crate::sim::MagicKind;

/// Register sizes of a channel `U` on `(A, B, E)`.
///
/// Logical wires are numbered A first, then B, then E. The compiled form appends the
/// control wire and, when some gate needs it, one scratch ancilla; both live in E.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registers {
    pub a: usize,
    pub b: usize,
    pub e: usize,
}

impl Registers {
    pub fn new(a: usize, b: usize, e: usize) -> Self {
        Registers { a, b, e }
    }

    pub fn width(&self) -> usize {
        self.a + self.b + self.e
    }

    pub fn b_wires(&self) -> std::ops::Range<usize> {
        self.a..self.a + self.b
    }
}

/// Correction applied after the gadget of a magic gate, as seen by the receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    /// `Y^a`, absorbed into the key.
    PauliY,
    /// `X^a` then `K^a`; the `K` is a second gadget chosen by the verifier's answer.
    XThenK,
    /// `Z^{a_1} X^{a_2}`, absorbed into the key.
    PauliZX,
}

impl Correction {
    fn for_kind(kind: MagicKind) -> Self {
        match kind {
            MagicKind::K => Correction::PauliY,
            MagicKind::T => Correction::XThenK,
            MagicKind::H => Correction::PauliZX,
        }
    }
}

fn t_dagger(q: usize) -> [Gate; 3] {
    [Gate::T(q), Gate::K(q), Gate::Z(q)]
}

fn k_dagger(q: usize) -> [Gate; 2] {
    [Gate::K(q), Gate::Z(q)]
}

/// Relative-phase Toffoli onto a clean ancilla `a`: maps `|c,t,0⟩` to `|c,t,ct⟩` up to a
/// phase that its second application undoes.
fn relative_toffoli(c: usize, t: usize, a: usize) -> Vec<Gate> {
    let mut g = vec![Gate::H(a), Gate::T(a), Gate::Cnot(t, a)];
    g.extend(t_dagger(a));
    g.extend([Gate::Cnot(c, a), Gate::T(a), Gate::Cnot(t, a)]);
    g.extend(t_dagger(a));
    g.push(Gate::H(a));
    g
}

fn toffoli(c1: usize, c2: usize, t: usize) -> Vec<Gate> {
    let mut g = vec![Gate::H(t), Gate::Cnot(c2, t)];
    g.extend(t_dagger(t));
    g.extend([Gate::Cnot(c1, t), Gate::T(t), Gate::Cnot(c2, t)]);
    g.extend(t_dagger(t));
    g.extend([Gate::Cnot(c1, t), Gate::T(c2), Gate::T(t), Gate::H(t), Gate::Cnot(c1, c2), Gate::T(c1)]);
    g.extend(t_dagger(c2));
    g.push(Gate::Cnot(c1, c2));
    g
}

/// Whether the controlled form of `g` uses the scratch ancilla.
pub fn needs_scratch(g: &Gate) -> bool {
    matches!(g, Gate::T(_))
}

/// The fixed decomposition of controlled-`g` with control `c` over the universal set.
///
/// Controlled-T needs a scratch wire in `|0⟩`, which it returns to `|0⟩`.
pub fn controlled_gate(g: &Gate, c: usize, scratch: Option<usize>) -> Result<Vec<Gate>, QotpError> {
    if g.qubits().contains(&c) || scratch.is_some_and(|s| g.qubits().contains(&s) || s == c) {
        return Err(QotpError::Wire(format!("control or scratch overlaps {g:?}")));
    }
    Ok(match *g {
        Gate::X(q) => vec![Gate::Cnot(c, q)],
        Gate::Y(q) => {
            let mut v = k_dagger(q).to_vec();
            v.extend([Gate::Cnot(c, q), Gate::K(q)]);
            v
        }
        Gate::Z(q) => vec![Gate::H(q), Gate::Cnot(c, q), Gate::H(q)],
        Gate::K(q) => {
            let mut v = vec![Gate::T(c), Gate::T(q), Gate::Cnot(c, q)];
            v.extend(t_dagger(q));
            v.push(Gate::Cnot(c, q));
            v
        }
        Gate::H(q) => {
            let mut v = vec![Gate::K(q), Gate::H(q), Gate::T(q), Gate::Cnot(c, q)];
            v.extend(t_dagger(q));
            v.push(Gate::H(q));
            v.extend(k_dagger(q));
            v
        }
        Gate::T(q) => {
            let a = scratch.ok_or_else(|| QotpError::Wire("controlled T needs a scratch wire".into()))?;
            let mut v = relative_toffoli(c, q, a);
            v.push(Gate::T(a));
            v.extend(relative_toffoli(c, q, a));
            v
        }
        Gate::Cnot(x, y) => toffoli(c, x, y),
    })
}

/// `U`, its controlled form, and the magic bookkeeping of the controlled form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompiledProgram {
    pub registers: Registers,
    pub base: Vec<Gate>,
    pub controlled: Vec<Gate>,
    /// Wire of the control qubit.
    pub control: usize,
    pub scratch: Option<usize>,
    /// `V^(0)..V^(r)`: part `i ≥ 1` starts with the `i`-th magic gate.
    pub partition: Vec<Vec<Gate>>,
    pub corrections: Vec<Correction>,
    pub magic: Vec<MagicKind>,
}

impl CompiledProgram {
    pub fn r(&self) -> usize {
        self.magic.len()
    }

    /// Number of wires of the controlled circuit.
    pub fn width(&self) -> usize {
        self.registers.width() + 1 + usize::from(self.scratch.is_some())
    }

    /// Wires held in the authenticated ancilla register: E, control, scratch.
    pub fn e_wires(&self) -> std::ops::Range<usize> {
        self.registers.a + self.registers.b..self.width()
    }

    /// Concatenation of the partition.
    pub fn reassemble(&self) -> Vec<Gate> {
        self.partition.concat()
    }

    /// Magic registers in consumption order: `T` gadgets also take one `K` state.
    pub fn magic_inventory(&self) -> Vec<MagicKind> {
        let mut out = Vec::new();
        for k in &self.magic {
            out.push(*k);
            if *k == MagicKind::T {
                out.push(MagicKind::K);
            }
        }
        out
    }
}

/// Replaces every gate of `base` by its controlled decomposition and partitions the result.
pub fn compile_controlled_program(registers: Registers, base: &[Gate]) -> Result<CompiledProgram, QotpError> {
    let n = registers.width();
    for g in base {
        if g.qubits().iter().any(|&q| q >= n) {
            return Err(QotpError::Wire(format!("{g:?} outside {n} declared wires")));
        }
    }
    let control = n;
    let scratch = base.iter().any(needs_scratch).then_some(n + 1);
    let mut controlled = Vec::new();
    for g in base {
        controlled.extend(controlled_gate(g, control, scratch)?);
    }
    let mut partition = vec![Vec::new()];
    let mut magic = Vec::new();
    for g in &controlled {
        if let Some(kind) = crate::gadgets::magic_for(g) {
            magic.push(kind);
            partition.push(Vec::new());
        }
        partition.last_mut().expect("partition starts non-empty").push(*g);
    }
    let corrections = magic.iter().map(|k| Correction::for_kind(*k)).collect();
    Ok(CompiledProgram { registers, base: base.to_vec(), controlled, control, scratch, partition, corrections, magic })
}

/// Gate names accepted in channel descriptors.
pub fn parse_gate(name: &str, wires: &[usize]) -> Result<Gate, QotpError> {
    let one = || match wires {
        [q] => Ok(*q),
        _ => Err(QotpError::Gate(format!("{name} takes one wire"))),
    };
    Ok(match name.to_ascii_uppercase().as_str() {
        "X" => Gate::X(one()?),
        "Y" => Gate::Y(one()?),
        "Z" => Gate::Z(one()?),
        "H" => Gate::H(one()?),
        "K" | "S" => Gate::K(one()?),
        "T" => Gate::T(one()?),
        "CNOT" | "CX" => match wires {
            [c, t] if c != t => Gate::Cnot(*c, *t),
            _ => return Err(QotpError::Gate("CNOT takes two distinct wires".into())),
        },
        other => return Err(QotpError::Gate(format!("{other} is outside the universal set"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::max_abs_diff;
    use crate::pauli::{circuit_unitary, C64};
    use nalgebra::DMatrix;

    /// Dense controlled-`g` on `n` wires with control `c`.
    fn reference(n: usize, g: &Gate, c: usize) -> DMatrix<C64> {
        let u = circuit_unitary(n, &[*g]);
        let dim = 1 << n;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for j in 0..dim {
            if (j >> c) & 1 == 1 {
                for i in 0..dim {
                    m[(i, j)] = u[(i, j)];
                }
            } else {
                m[(j, j)] = C64::new(1.0, 0.0);
            }
        }
        m
    }

    #[test]
    fn clifford_entries_are_exact() {
        for g in [Gate::X(0), Gate::Y(0), Gate::Z(0), Gate::K(0), Gate::H(0)] {
            let got = circuit_unitary(2, &controlled_gate(&g, 1, None).unwrap());
            assert!(max_abs_diff(&got, &reference(2, &g, 1)) < 1e-12, "{g:?}");
        }
        let got = circuit_unitary(3, &controlled_gate(&Gate::Cnot(0, 1), 2, None).unwrap());
        assert!(max_abs_diff(&got, &reference(3, &Gate::Cnot(0, 1), 2)) < 1e-12);
        let got = circuit_unitary(3, &controlled_gate(&Gate::Cnot(1, 0), 2, None).unwrap());
        assert!(max_abs_diff(&got, &reference(3, &Gate::Cnot(1, 0), 2)) < 1e-12);
    }

    #[test]
    fn controlled_t_is_exact_on_clean_scratch() {
        let got = circuit_unitary(3, &controlled_gate(&Gate::T(0), 1, Some(2)).unwrap());
        let want = reference(3, &Gate::T(0), 1);
        for j in 0..4 {
            for i in 0..8 {
                let w = if i < 4 { want[(i, j)] } else { C64::new(0.0, 0.0) };
                assert!((got[(i, j)] - w).norm() < 1e-12, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn compiled_single_t_acts_on_and_off() {
        let p = compile_controlled_program(Registers::new(0, 1, 0), &[Gate::T(0)]).unwrap();
        assert_eq!((p.control, p.scratch), (1, Some(2)));
        let u = circuit_unitary(3, &p.controlled);
        let t = circuit_unitary(1, &[Gate::T(0)]);
        for j in 0..2 {
            for i in 0..2 {
                // control on: T on wire 0; control off: identity
                assert!((u[(i | 2, j | 2)] - t[(i, j)]).norm() < 1e-12);
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((u[(i, j)] - C64::new(id, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn x_compiles_to_one_cnot() {
        let p = compile_controlled_program(Registers::new(0, 1, 0), &[Gate::X(0)]).unwrap();
        assert_eq!(p.controlled, vec![Gate::Cnot(1, 0)]);
        assert_eq!(p.r(), 0);
        assert_eq!(p.partition.len(), 1);
    }

    #[test]
    fn controlled_h_magic_count_matches_table() {
        let p = compile_controlled_program(Registers::new(0, 1, 0), &[Gate::H(0)]).unwrap();
        let table = controlled_gate(&Gate::H(0), 1, None).unwrap();
        let count = table.iter().filter(|g| matches!(g, Gate::K(_) | Gate::T(_) | Gate::H(_))).count();
        assert_eq!(p.r(), count);
        assert_eq!(p.r(), 7);
        assert_eq!(p.partition.len(), p.r() + 1);
        assert_eq!(p.reassemble(), p.controlled);
    }

    #[test]
    fn toffoli_has_seven_t() {
        let p = compile_controlled_program(Registers::new(0, 2, 0), &[Gate::Cnot(0, 1)]).unwrap();
        assert_eq!(p.controlled.iter().filter(|g| matches!(g, Gate::T(_))).count(), 7);
    }

    #[test]
    fn out_of_range_wire_is_rejected() {
        assert!(compile_controlled_program(Registers::new(0, 1, 0), &[Gate::X(1)]).is_err());
        assert!(parse_gate("SWAP", &[0, 1]).is_err());
        assert_eq!(parse_gate("cx", &[0, 1]).unwrap(), Gate::Cnot(0, 1));
    }

    #[test]
    fn inventory_pairs_t_with_k() {
        let p = compile_controlled_program(Registers::new(0, 1, 0), &[Gate::K(0)]).unwrap();
        let inv = p.magic_inventory();
        let t = inv.iter().filter(|k| **k == MagicKind::T).count();
        let k = inv.iter().filter(|k| **k == MagicKind::K).count();
        assert_eq!((t, k), (3, 4));
    }
}
