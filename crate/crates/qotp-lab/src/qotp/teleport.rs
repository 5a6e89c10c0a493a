//! Bell measurements and teleportation resource states.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::QotpError;
use crate::pauli::{inverse_gates, Gate, PauliOperator};
use crate::sim::{measure_computational, Backend};
use crate::trap::TrapCode;

/// Which operator sits on the far half of the EPR pairs.
#[derive(Clone, Debug)]
pub enum PairKind {
    Plain,
    /// `P·E` on one logical qubit: the far half is a whole block.
    ThroughAuth { trap: TrapCode, key: PauliOperator },
    /// `E*·S` on a whole block: the far half decodes to one data qubit.
    ThroughDeauth { trap: TrapCode, key: PauliOperator },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairLabel {
    Plain,
    ThroughAuth,
    ThroughDeauth,
}

impl PairKind {
    pub fn label(&self) -> PairLabel {
        match self {
            PairKind::Plain => PairLabel::Plain,
            PairKind::ThroughAuth { .. } => PairLabel::ThroughAuth,
            PairKind::ThroughDeauth { .. } => PairLabel::ThroughDeauth,
        }
    }
}

/// A prepared resource: `near` is measured against the input, `far` receives it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeleportPair {
    pub near: Vec<usize>,
    pub far: Vec<usize>,
    /// Far qubit carrying the teleported data; for a plain pair this is `far` itself.
    pub output: Vec<usize>,
}

fn epr<B: Backend + ?Sized>(state: &mut B, near: &[usize], far: &[usize]) -> Result<(), QotpError> {
    for (&a, &b) in near.iter().zip(far) {
        state.apply_gate(&Gate::H(a))?;
        state.apply_gate(&Gate::Cnot(a, b))?;
    }
    Ok(())
}

/// Appends a resource of `width` plain qubits (plain pairs only) or one block.
pub fn prepare_pair<B: Backend + ?Sized>(state: &mut B, kind: &PairKind, width: usize) -> Result<TeleportPair, QotpError> {
    match kind {
        PairKind::Plain => {
            let near: Vec<usize> = state.append_qubits(width)?.collect();
            let far: Vec<usize> = state.append_qubits(width)?.collect();
            epr(state, &near, &far)?;
            Ok(TeleportPair { output: far.clone(), near, far })
        }
        PairKind::ThroughAuth { trap, key } => {
            let near: Vec<usize> = state.append_qubits(1)?.collect();
            let far: Vec<usize> = state.append_qubits(trap.len())?.collect();
            let d = far[trap.data_phys()];
            epr(state, &near, &[d])?;
            for g in trap.encoder_gates() {
                state.apply_gate(&g.remap(|q| far[q]))?;
            }
            state.apply_pauli(&key.embed(state.n(), &far))?;
            Ok(TeleportPair { near, output: far.clone(), far })
        }
        PairKind::ThroughDeauth { trap, key } => {
            let near: Vec<usize> = state.append_qubits(trap.len())?.collect();
            let far: Vec<usize> = state.append_qubits(trap.len())?.collect();
            epr(state, &near, &far)?;
            state.apply_pauli(&key.embed(state.n(), &far))?;
            for g in inverse_gates(&trap.encoder_gates()) {
                state.apply_gate(&g.remap(|q| far[q]))?;
            }
            Ok(TeleportPair { output: vec![far[trap.data_phys()]], near, far })
        }
    }
}

/// Bell measurement of `input` against `near`, qubit by qubit.
///
/// Returns `T` with `x` from the `near` outcomes and `z` from the `input` outcomes: the far
/// half then holds `C·T·|ψ⟩` up to phase.
pub fn bell_measure<B: Backend + ?Sized, R: Rng + ?Sized>(
    state: &mut B,
    input: &[usize],
    near: &[usize],
    rng: &mut R,
) -> Result<PauliOperator, QotpError> {
    if input.len() != near.len() {
        return Err(QotpError::Wire(format!("Bell measurement of {} against {} qubits", input.len(), near.len())));
    }
    for (&a, &b) in input.iter().zip(near) {
        state.apply_gate(&Gate::Cnot(a, b))?;
        state.apply_gate(&Gate::H(a))?;
    }
    let mut z = Vec::with_capacity(input.len());
    let mut x = Vec::with_capacity(input.len());
    for (&a, &b) in input.iter().zip(near) {
        z.push(measure_computational(state, &[a], rng)?.bits[0]);
        x.push(measure_computational(state, &[b], rng)?.bits[0]);
    }
    Ok(PauliOperator::from_bits(&x, &z, 0)?)
}

/// Teleports `input` through `pair` and returns the outcome Pauli.
pub fn bell_teleport<B: Backend + ?Sized, R: Rng + ?Sized>(
    state: &mut B,
    input: &[usize],
    pair: &TeleportPair,
    rng: &mut R,
) -> Result<PauliOperator, QotpError> {
    bell_measure(state, input, &pair.near, rng)
}

/// Pauli bits as `x` then `z`.
pub fn pauli_bits(p: &PauliOperator) -> Vec<bool> {
    let mut v = p.x_bits();
    v.extend(p.z_bits());
    v
}

/// Inverse of [`pauli_bits`].
pub fn pauli_from_bits(bits: &[bool]) -> PauliOperator {
    let n = bits.len() / 2;
    PauliOperator::from_bits(&bits[..n], &bits[n..2 * n], 0).expect("equal halves")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::css::toy_code;
    use crate::dense::fidelity_pure;
    use crate::pauli::{circuit_unitary, PauliKind, C64};
    use crate::sim::{StabilizerTableau, StateVector};
    use crate::trap::TrapFamily;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    #[test]
    fn plain_teleport_observes_every_outcome() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut seen = BTreeSet::new();
        for trial in 0..400 {
            let mut s = StabilizerTableau::zero(2).unwrap();
            let prep = [Gate::H(0), Gate::K(0), Gate::Cnot(0, 1), Gate::H(1)];
            let prep = &prep[..trial % 5];
            for g in prep {
                s.apply_gate(g).unwrap();
            }
            let reference = s.clone();
            let pair = prepare_pair(&mut s, &PairKind::Plain, 2).unwrap();
            let t = bell_teleport(&mut s, &[0, 1], &pair, &mut rng).unwrap();
            seen.insert(t.to_text());
            s.apply_pauli(&t.embed(s.n(), &pair.far)).unwrap();
            // output equals input: compare the two-qubit densities
            let got = s.density_of(&pair.far).unwrap();
            let want = reference.density_of(&[0, 1]).unwrap();
            assert!((got - want).norm() < 1e-9);
        }
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn through_auth_yields_keyed_encoding_of_teleported_state() {
        let fam = TrapFamily::new(toy_code()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..40 {
            let trap = fam.sample(&mut rng);
            let key = PauliOperator::random(3, &mut rng);
            let mut s = StabilizerTableau::zero(1).unwrap();
            s.apply_gate(&Gate::H(0)).unwrap();
            s.apply_gate(&Gate::K(0)).unwrap();
            let pair = prepare_pair(&mut s, &PairKind::ThroughAuth { trap: trap.clone(), key: key.clone() }, 1).unwrap();
            let t = bell_teleport(&mut s, &[0], &pair, &mut rng).unwrap();
            // P·E·T|ψ⟩ built directly
            let mut want = StabilizerTableau::zero(3).unwrap();
            let d = trap.data_phys();
            for g in [Gate::H(d), Gate::K(d)] {
                want.apply_gate(&g).unwrap();
            }
            want.apply_pauli(&t.embed(3, &[d])).unwrap();
            for g in trap.encoder_gates() {
                want.apply_gate(&g).unwrap();
            }
            want.apply_pauli(&key).unwrap();
            let got = s.density_of(&pair.far).unwrap();
            assert!((got - want.density_of(&[0, 1, 2]).unwrap()).norm() < 1e-9);
        }
    }

    /// `U_Out·C·U_In^T·T·U_D|ψ⟩` for product Pauli attacks on a plain and an authenticated pair.
    #[test]
    fn appendix_identity_under_pauli_attacks() {
        let fam = TrapFamily::new(toy_code()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let psi_prep = [Gate::H(0), Gate::T(0), Gate::H(0), Gate::K(0)];
        for trial in 0..48 {
            let through = trial % 2 == 1;
            let trap = fam.sample(&mut rng);
            let key = PauliOperator::random(3, &mut rng);
            let kind = if through { PairKind::ThroughAuth { trap: trap.clone(), key: key.clone() } } else { PairKind::Plain };
            let mut s = StateVector::zero(1).unwrap();
            for g in &psi_prep {
                s.apply_gate(g).unwrap();
            }
            let pair = prepare_pair(&mut s, &kind, 1).unwrap();
            let far_len = pair.far.len();
            let ud = PauliKind::ALL[trial % 4];
            let uin = PauliKind::ALL[(trial / 4) % 4];
            let uout = PauliOperator::random(far_len, &mut rng);
            s.apply_pauli(&PauliOperator::single(s.n(), 0, ud)).unwrap();
            s.apply_pauli(&PauliOperator::single(s.n(), pair.near[0], uin)).unwrap();
            s.apply_pauli(&uout.embed(s.n(), &pair.far)).unwrap();
            let t = bell_teleport(&mut s, &[0], &pair, &mut rng).unwrap();
            // expected pure state on the far qubits
            let one = |k: PauliKind| PauliOperator::single(1, 0, k).to_dense();
            let mut v = circuit_unitary(1, &psi_prep) * DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
            v = one(ud) * v;
            v = t.to_dense() * v;
            // U_In^T on a single Pauli is ±U_In
            v = one(uin) * v;
            let full = if through {
                let d = trap.data_phys();
                let mut amps = vec![C64::new(0.0, 0.0); 8];
                amps[0] = v[0];
                amps[1 << d] = v[1];
                let enc = circuit_unitary(3, &trap.encoder_gates());
                key.to_dense() * enc * DVector::from_vec(amps)
            } else {
                v
            };
            let full = uout.to_dense() * full;
            let rho = s.density_of(&pair.far).unwrap();
            assert!(fidelity_pure(&full, &rho) > 1.0 - 1e-9, "trial {trial}");
        }
    }
}
