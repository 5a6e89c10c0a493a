//! `gadget-check`: logical action of every gadget, the gadget identity, and measurement.

use std::collections::BTreeMap;

use super::report::{Check, Ensemble, Relation, SuiteOutput};
use super::{ExperimentConfig, HarnessError};
use crate::css::{decode_then_measure, measure_then_decode, toy_code, CssCode};
use crate::dense::{fidelity_pure, pauli_eigenstate_preps, pauli_eigenstates};
use crate::gadgets::logical::max_identity_error;
use crate::gadgets::Session;
use crate::pauli::{circuit_unitary, Gate, PauliKind, PauliOperator, C64};
use crate::rng::{stream_rng, Stream};
use crate::sim::statevector::MAX_SV_QUBITS;
use crate::sim::{Backend, BackendKind, MagicKind, QuantumState, StabilizerTableau, StateVector};
use crate::trap::TrapFamily;
use crate::twirl::haar_unitary;

/// Stabilizer of eigenstate `i` of [`pauli_eigenstates`], on one qubit.
fn eigen_stabilizer(i: usize) -> PauliOperator {
    let mut s = PauliOperator::single(1, 0, PauliKind::Z);
    for g in &pauli_eigenstate_preps()[i] {
        s.conjugate_forward_gate(g);
    }
    s
}

fn magic_for_session(s: &mut Session<impl Backend>, gate: &Gate) -> Result<(), HarnessError> {
    match gate {
        Gate::K(_) => s.add_magic("k0", MagicKind::K)?,
        Gate::H(_) => s.add_magic("h0", MagicKind::H)?,
        Gate::T(_) => {
            s.add_magic("t0", MagicKind::T)?;
            s.add_magic("k0", MagicKind::K)?;
        }
        _ => {}
    }
    Ok(())
}

/// Worst `|1 − ⟨S⟩|` over outputs of single-qubit Clifford gadgets, and the rejection count.
fn single_qubit_clifford(family: &TrapFamily, gate: Gate, seeds: usize, base_seed: u64) -> Result<(f64, usize), HarnessError> {
    let mut worst = 0.0f64;
    let mut rejected = 0;
    for input in 0..6 {
        for k in 0..seeds {
            let seed = base_seed ^ ((input * seeds + k) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut s = Session::new(family.clone(), StabilizerTableau::zero(0)?, seed);
            s.add_data_register("q", &pauli_eigenstate_preps()[input])?;
            magic_for_session(&mut s, &gate)?;
            s.run_encoded_circuit(&[gate])?;
            let v = s.verify_register("q")?;
            if !v.accept || s.cheating_detected() {
                rejected += 1;
                continue;
            }
            let mut want = eigen_stabilizer(input);
            want.conjugate_forward_gate(&gate);
            let e = s.state().expectation(&want.embed(s.state().n(), &[v.data_qubit]))?;
            worst = worst.max((e - C64::new(1.0, 0.0)).norm());
        }
    }
    Ok((worst, rejected))
}

fn cnot(family: &TrapFamily, seeds: usize, base_seed: u64) -> Result<(f64, usize), HarnessError> {
    let mut worst = 0.0f64;
    let mut rejected = 0;
    let gate = Gate::Cnot(0, 1);
    for a in 0..6 {
        for b in 0..6 {
            for k in 0..seeds {
                let seed = base_seed ^ (((a * 6 + b) * seeds + k) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let mut s = Session::new(family.clone(), StabilizerTableau::zero(0)?, seed);
                s.add_data_register("a", &pauli_eigenstate_preps()[a])?;
                s.add_data_register("b", &pauli_eigenstate_preps()[b])?;
                s.run_encoded_circuit(&[gate])?;
                let va = s.verify_register("a")?;
                let vb = s.verify_register("b")?;
                if !va.accept || !vb.accept || s.cheating_detected() {
                    rejected += 1;
                    continue;
                }
                let n = s.state().n();
                let wires = [va.data_qubit, vb.data_qubit];
                for (idx, stab) in [(0usize, eigen_stabilizer(a)), (1, eigen_stabilizer(b))] {
                    let mut want = stab.embed(2, &[idx]);
                    want.conjugate_forward_gate(&gate);
                    let e = s.state().expectation(&want.embed(n, &wires))?;
                    worst = worst.max((e - C64::new(1.0, 0.0)).norm());
                }
            }
        }
    }
    Ok((worst, rejected))
}

/// Smallest output fidelity of the T gadget on the one-qubit trap code.
fn t_gadget(seeds: usize, base_seed: u64) -> Result<(f64, usize), HarnessError> {
    let family = TrapFamily::new(toy_code())?;
    let mut worst = 1.0f64;
    let mut rejected = 0;
    for input in 0..6 {
        for k in 0..seeds {
            let seed = base_seed ^ ((input * seeds + k) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut s = Session::new(family.clone(), QuantumState::zero(BackendKind::Sum, 0)?, seed);
            s.add_data_register("q", &pauli_eigenstate_preps()[input])?;
            magic_for_session(&mut s, &Gate::T(0))?;
            s.run_encoded_circuit(&[Gate::T(0)])?;
            let v = s.verify_register("q")?;
            if !v.accept || s.cheating_detected() {
                rejected += 1;
                continue;
            }
            let rho = s.state().density_of(&[v.data_qubit])?;
            let want = circuit_unitary(1, &[Gate::T(0)]) * &pauli_eigenstates()[input];
            worst = worst.min(fidelity_pure(&want, &rho));
        }
    }
    Ok((worst, rejected))
}

/// Every sequence of 1 to `max_r` magic gates on one wire.
fn magic_sequences(max_r: usize) -> Vec<Vec<Gate>> {
    let letters = [Gate::K(0), Gate::T(0), Gate::H(0)];
    let mut out: Vec<Vec<Gate>> = Vec::new();
    let mut frontier: Vec<Vec<Gate>> = vec![Vec::new()];
    for _ in 0..max_r {
        frontier = frontier
            .iter()
            .flat_map(|c| letters.iter().map(move |g| [c.as_slice(), &[*g]].concat()))
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

fn encode_logical(code: &CssCode, a0: C64, a1: C64) -> Result<StateVector, HarnessError> {
    let mut amps = vec![C64::new(0.0, 0.0); 1 << code.n()];
    amps[0] = a0;
    amps[1 << code.data_pos()] = a1;
    let mut s = StateVector::from_amplitudes(amps)?;
    for g in code.encoder_gates() {
        s.apply_gate(g)?;
    }
    Ok(s)
}

/// Worst gap between measure-then-decode and decode-then-measure, for masks of Z only and
/// for masks of any letters, both of weight at most 2.
fn measure_decode(code: &CssCode, states: usize, seed: u64) -> Result<(f64, f64), HarnessError> {
    if code.n() > MAX_SV_QUBITS {
        return Err(HarnessError::Capability(format!("{}-qubit code on the statevector backend", code.n())));
    }
    let n = code.n();
    let mut masks: Vec<PauliOperator> = vec![PauliOperator::identity(n)];
    for i in 0..n {
        for k in [PauliKind::X, PauliKind::Y, PauliKind::Z] {
            masks.push(PauliOperator::single(n, i, k));
            for j in i + 1..n {
                for l in [PauliKind::X, PauliKind::Y, PauliKind::Z] {
                    let mut q = PauliOperator::single(n, i, k);
                    q.set_kind(j, l);
                    masks.push(q);
                }
            }
        }
    }
    let mut rng = stream_rng(seed, Stream::Sampling);
    let (mut z_only, mut any) = (0.0f64, 0.0f64);
    for _ in 0..states {
        let u = haar_unitary(2, &mut rng);
        let base = encode_logical(code, u[(0, 0)], u[(1, 0)])?;
        for q in &masks {
            let mut s = base.clone();
            s.apply_pauli(q)?;
            let m = measure_then_decode(code, &s)?;
            let d = decode_then_measure(code, &s)?;
            let gap = m.iter().zip(&d).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            any = any.max(gap);
            if q.x_bits().iter().all(|b| !b) {
                z_only = z_only.max(gap);
            }
        }
    }
    Ok((z_only, any))
}

pub(super) fn gadget_check(config: &ExperimentConfig) -> Result<SuiteOutput, HarnessError> {
    let family = config.code.family()?;
    let tol = &config.tolerances;
    let seeds = config.samples.seeds_per_input.max(1);
    let mut out = SuiteOutput::default();
    let mut per_gate = BTreeMap::new();
    let mut clifford_worst = 0.0f64;
    let mut rejected = 0;
    for gate in [Gate::X(0), Gate::Y(0), Gate::Z(0), Gate::K(0), Gate::H(0)] {
        let (w, r) = single_qubit_clifford(&family, gate, seeds, config.seed)?;
        per_gate.insert(gate.name(), w);
        clifford_worst = clifford_worst.max(w);
        rejected += r;
    }
    let (w, r) = cnot(&family, seeds, config.seed)?;
    per_gate.insert("CNOT", w);
    clifford_worst = clifford_worst.max(w);
    rejected += r;
    out.check(Check::new("clifford_gadgets_max_deviation", clifford_worst, Relation::Le, tol.exact, Ensemble::Exhaustive));
    out.check(Check::new("clifford_gadgets_rejections", rejected as f64, Relation::Eq, 0.0, Ensemble::Exhaustive));

    let (f, r) = t_gadget(seeds, config.seed)?;
    per_gate.insert("T", 1.0 - f);
    out.check(Check::new("t_gadget_min_fidelity", f, Relation::Ge, 1.0 - tol.statevector, Ensemble::Exhaustive));
    out.check(Check::new("t_gadget_rejections", r as f64, Relation::Eq, 0.0, Ensemble::Exhaustive));
    out.record("per_gate_deviation", &per_gate)?;

    let mut identity = 0.0f64;
    for c in magic_sequences(3) {
        identity = identity.max(max_identity_error(1, &c, false)?);
    }
    for c in [vec![Gate::H(0), Gate::T(0), Gate::Cnot(0, 1), Gate::K(1)], vec![Gate::H(1), Gate::Cnot(1, 0), Gate::T(0), Gate::X(1), Gate::K(0)]] {
        identity = identity.max(max_identity_error(2, &c, false)?);
    }
    let mut corrupted = 0.0f64;
    for c in magic_sequences(2) {
        corrupted = corrupted.max(max_identity_error(1, &c, true)?);
    }
    out.check(Check::new("gadget_identity_r_le_3", identity, Relation::Le, tol.statevector, Ensemble::Exhaustive));
    out.check(Check::new("corrupted_identity_r_le_2", corrupted, Relation::Le, tol.statevector, Ensemble::Exhaustive));

    let (z_only, any) = measure_decode(family.base(), config.samples.logical_states, config.seed)?;
    out.check(Check::new("measure_decode_z_masks", z_only, Relation::Le, tol.statevector, Ensemble::Exhaustive));
    out.check(Check::new("measure_decode_all_masks", any, Relation::Le, tol.statevector, Ensemble::Exhaustive));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn eigen_stabilizers_fix_their_states() {
        for (i, psi) in pauli_eigenstates().iter().enumerate() {
            let s = eigen_stabilizer(i).to_dense();
            let image: DVector<C64> = &s * psi;
            assert!((image - psi).norm() < 1e-12, "{i}");
        }
    }

    #[test]
    fn sequence_counts() {
        assert_eq!(magic_sequences(3).len(), 3 + 9 + 27);
    }
}
