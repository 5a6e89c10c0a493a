//! Magic-state gadgets on bare qubits and their outcome-indexed Kraus operators.

use nalgebra::DMatrix;

use super::GadgetError;
use crate::pauli::{Gate, C64};
use crate::sim::{Backend, MagicKind, StateVector};

/// Magic resource consumed by a logical gate, if any.
pub fn magic_for(g: &Gate) -> Option<MagicKind> {
    match g {
        Gate::K(_) => Some(MagicKind::K),
        Gate::T(_) => Some(MagicKind::T),
        Gate::H(_) => Some(MagicKind::H),
        _ => None,
    }
}

/// Number of measured qubits in the gadget for `g`.
pub fn measured_bits(g: &Gate) -> usize {
    match g {
        Gate::K(_) | Gate::T(_) => 1,
        Gate::H(_) => 2,
        _ => 0,
    }
}

pub fn total_measured_bits(circuit: &[Gate]) -> usize {
    circuit.iter().map(measured_bits).sum()
}

fn check_wires(k: usize, circuit: &[Gate]) -> Result<(), GadgetError> {
    for g in circuit {
        for q in g.qubits() {
            if q >= k {
                return Err(GadgetError::UnknownRegister(format!("wire {q}")));
            }
        }
    }
    Ok(())
}

/// `⟨a′|V_a|μ⟩` as a map from the `k` input wires to the `k` output wires.
///
/// Corrections follow `applied` (the bits `a`), and the measured qubits are
/// projected onto `observed` (the bits `a′`), both in gadget order.
pub fn gadget_operator(k: usize, circuit: &[Gate], applied: &[bool], observed: &[bool]) -> Result<DMatrix<C64>, GadgetError> {
    check_wires(k, circuit)?;
    let m = total_measured_bits(circuit);
    if applied.len() != m || observed.len() != m {
        return Err(GadgetError::OutcomeLength { expected: m, got: applied.len().min(observed.len()) });
    }
    let magic: Vec<MagicKind> = circuit.iter().filter_map(magic_for).collect();
    let total = k + magic.iter().map(|m| m.width()).sum::<usize>();
    let dim_in = 1usize << k;
    let mut out = DMatrix::<C64>::zeros(dim_in, dim_in);
    for j in 0..dim_in {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << total];
        amps[j] = C64::new(1.0, 0.0);
        let mut s = StateVector::from_amplitudes(amps)?;
        let mut next = k;
        let mut magic_qubits = Vec::new();
        for kind in &magic {
            let qs: Vec<usize> = (next..next + kind.width()).collect();
            next += kind.width();
            for g in kind.preparation(&qs) {
                s.apply_gate(&g)?;
            }
            magic_qubits.push(qs);
        }
        let mut wires: Vec<usize> = (0..k).collect();
        let mut measured = Vec::new();
        let mut bit = 0;
        let mut magic_iter = magic_qubits.into_iter();
        for g in circuit {
            match *g {
                Gate::K(w) | Gate::T(w) => {
                    let mq = magic_iter.next().expect("counted")[0];
                    s.apply_gate(&Gate::Cnot(mq, wires[w]))?;
                    measured.push(wires[w]);
                    if applied[bit] {
                        let fix: &[Gate] = if matches!(g, Gate::K(_)) { &[Gate::Y(mq)] } else { &[Gate::X(mq), Gate::K(mq)] };
                        for f in fix {
                            s.apply_gate(f)?;
                        }
                    }
                    bit += 1;
                    wires[w] = mq;
                }
                Gate::H(w) => {
                    let qs = magic_iter.next().expect("counted");
                    let (m1, m2) = (qs[0], qs[1]);
                    s.apply_gate(&Gate::Cnot(wires[w], m2))?;
                    s.apply_gate(&Gate::H(wires[w]))?;
                    measured.push(m2);
                    measured.push(wires[w]);
                    if applied[bit] {
                        s.apply_gate(&Gate::Z(m1))?;
                    }
                    if applied[bit + 1] {
                        s.apply_gate(&Gate::X(m1))?;
                    }
                    bit += 2;
                    wires[w] = m1;
                }
                other => s.apply_gate(&other.remap(|q| wires[q]))?,
            }
        }
        let base: usize = measured.iter().zip(observed).map(|(&q, &b)| (b as usize) << q).sum();
        for o in 0..dim_in {
            let idx = base + (0..k).map(|l| ((o >> l) & 1) << wires[l]).sum::<usize>();
            out[(o, j)] = s.amplitudes()[idx];
        }
    }
    Ok(out)
}

/// `V_{a−a′}`: the circuit with the Clifford errors left by mismatched corrections.
pub fn corrupted_reference(k: usize, circuit: &[Gate], applied: &[bool], observed: &[bool]) -> Result<Vec<Gate>, GadgetError> {
    check_wires(k, circuit)?;
    let mut out = Vec::new();
    let mut bit = 0;
    for g in circuit {
        out.push(*g);
        match *g {
            Gate::K(w) => {
                if applied[bit] != observed[bit] {
                    out.push(Gate::Y(w));
                }
                bit += 1;
            }
            Gate::T(w) => {
                match (applied[bit], observed[bit]) {
                    (true, false) => out.extend([Gate::X(w), Gate::K(w)]),
                    // (KX)^{-1} = X K*
                    (false, true) => out.extend([Gate::K(w), Gate::Z(w), Gate::X(w)]),
                    _ => {}
                }
                bit += 1;
            }
            Gate::H(w) => {
                if applied[bit] != observed[bit] {
                    out.push(Gate::Z(w));
                }
                if applied[bit + 1] != observed[bit + 1] {
                    out.push(Gate::X(w));
                }
                bit += 2;
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Largest deviation of `2^{m/2}·⟨a′|V_a|μ⟩` from `V_{a−a′}` up to global phase, over all outcome pairs.
pub fn max_identity_error(k: usize, circuit: &[Gate], corrupted: bool) -> Result<f64, GadgetError> {
    let m = total_measured_bits(circuit);
    let scale = C64::new(2f64.powf(m as f64 / 2.0), 0.0);
    let mut worst = 0.0f64;
    for a in 0..(1usize << m) {
        let applied: Vec<bool> = (0..m).map(|i| (a >> i) & 1 == 1).collect();
        let observed_set: Vec<usize> = if corrupted { (0..(1usize << m)).collect() } else { vec![a] };
        for b in observed_set {
            let observed: Vec<bool> = (0..m).map(|i| (b >> i) & 1 == 1).collect();
            let op = gadget_operator(k, circuit, &applied, &observed)? * scale;
            let reference = crate::pauli::circuit_unitary(k, &corrupted_reference(k, circuit, &applied, &observed)?);
            worst = worst.max(crate::dense::diff_up_to_phase(&op, &reference));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::circuit_unitary;

    #[test]
    fn single_gadgets_implement_their_gate() {
        for g in [Gate::K(0), Gate::T(0), Gate::H(0)] {
            assert!(max_identity_error(1, &[g], false).unwrap() < 1e-12, "{g:?}");
        }
    }

    #[test]
    fn universal_a_identity_up_to_three_gadgets() {
        let circuits = [
            vec![Gate::H(0), Gate::T(0), Gate::Cnot(0, 1), Gate::K(1)],
            vec![Gate::T(0), Gate::T(0), Gate::T(0)],
            vec![Gate::H(1), Gate::Cnot(1, 0), Gate::T(0), Gate::X(1), Gate::K(0)],
        ];
        for c in circuits {
            assert!(max_identity_error(2, &c, false).unwrap() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn corrupted_identity_up_to_two_gadgets() {
        for c in [vec![Gate::T(0), Gate::K(0)], vec![Gate::H(0), Gate::T(0)], vec![Gate::K(0), Gate::Cnot(0, 1), Gate::T(1)]] {
            assert!(max_identity_error(2, &c, true).unwrap() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn kraus_operators_have_the_right_norm() {
        let op = gadget_operator(1, &[Gate::T(0)], &[true], &[true]).unwrap();
        let v = circuit_unitary(1, &[Gate::T(0)]);
        let ratio = op.norm() / v.norm();
        assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }
}
