//! `teleport-check`: plain and authenticated teleportation, and the Pauli-attack identity.

use std::collections::BTreeSet;

use nalgebra::DVector;
use rand::Rng;

use super::report::{Check, Ensemble, Relation, SuiteOutput};
use super::{ExperimentConfig, HarnessError};
use crate::css::toy_code;
use crate::dense::{fidelity_pure, max_abs_diff};
use crate::pauli::{circuit_unitary, Gate, PauliKind, PauliOperator, C64};
use crate::qotp::teleport::{bell_teleport, prepare_pair, PairKind};
use crate::rng::{stream_rng, Stream};
use crate::sim::{Backend, StabilizerTableau, StateVector};
use crate::trap::{TrapCode, TrapFamily};

const CLIFFORD_LETTERS: usize = 4;

/// A random two-qubit Clifford preparation.
fn random_prep<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<Gate> {
    (0..len)
        .map(|_| match rng.gen_range(0..CLIFFORD_LETTERS) {
            0 => Gate::H(rng.gen_range(0..2)),
            1 => Gate::K(rng.gen_range(0..2)),
            2 => Gate::Cnot(0, 1),
            _ => Gate::Cnot(1, 0),
        })
        .collect()
}

/// Largest density gap after plain teleportation of two qubits, and the outcomes seen.
fn plain(trials: usize, seed: u64) -> Result<(f64, usize), HarnessError> {
    let mut rng = stream_rng(seed, Stream::Sampling);
    let mut seen = BTreeSet::new();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let mut s = StabilizerTableau::zero(2)?;
        let len = rng.gen_range(0..6);
        for g in random_prep(&mut rng, len) {
            s.apply_gate(&g)?;
        }
        let want = s.density_of(&[0, 1])?;
        let pair = prepare_pair(&mut s, &PairKind::Plain, 2)?;
        let t = bell_teleport(&mut s, &[0, 1], &pair, &mut rng)?;
        seen.insert(t.to_text());
        s.apply_pauli(&t.embed(s.n(), &pair.far))?;
        worst = worst.max(max_abs_diff(&s.density_of(&pair.far)?, &want));
    }
    Ok((worst, seen.len()))
}

/// Largest `|1 − ⟨g⟩|` over stabilizers of `P·E·T|ψ⟩`, built directly, measured on the block
/// that came out of teleportation through `P·E`.
fn through_auth(family: &TrapFamily, trials: usize, seed: u64) -> Result<f64, HarnessError> {
    let mut rng = stream_rng(seed, Stream::Keys);
    let len = family.block_len();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let trap = family.sample(&mut rng);
        let key = PauliOperator::random(len, &mut rng);
        let prep: Vec<Gate> = (0..rng.gen_range(0..4)).map(|_| if rng.gen() { Gate::H(0) } else { Gate::K(0) }).collect();
        let mut s = StabilizerTableau::zero(1)?;
        for g in &prep {
            s.apply_gate(g)?;
        }
        let pair = prepare_pair(&mut s, &PairKind::ThroughAuth { trap: trap.clone(), key: key.clone() }, 1)?;
        let t = bell_teleport(&mut s, &[0], &pair, &mut rng)?;
        let want = keyed_encoding(&trap, &key, &prep, &t)?;
        for g in want.stabilizers() {
            let e = s.expectation(&g.embed(s.n(), &pair.far))?;
            worst = worst.max((e - C64::new(1.0, 0.0)).norm());
        }
    }
    Ok(worst)
}

fn keyed_encoding(trap: &TrapCode, key: &PauliOperator, prep: &[Gate], t: &PauliOperator) -> Result<StabilizerTableau, HarnessError> {
    let mut want = StabilizerTableau::zero(trap.len())?;
    let d = trap.data_phys();
    for g in prep {
        want.apply_gate(&g.remap(|_| d))?;
    }
    want.apply_pauli(&t.embed(trap.len(), &[d]))?;
    for g in trap.encoder_gates() {
        want.apply_gate(&g)?;
    }
    want.apply_pauli(key)?;
    Ok(want)
}

/// Smallest fidelity of `U_Out·C·U_In^T·T·U_D|ψ⟩` with the state after Pauli attacks around a
/// plain or authenticated teleportation, on the one-qubit trap code.
fn attack_identity(trials: usize, seed: u64) -> Result<f64, HarnessError> {
    let family = TrapFamily::new(toy_code())?;
    let mut rng = stream_rng(seed, Stream::Adversary);
    let psi_prep = [Gate::H(0), Gate::T(0), Gate::H(0), Gate::K(0)];
    let one = |k: PauliKind| PauliOperator::single(1, 0, k).to_dense();
    let mut worst = 1.0f64;
    for trial in 0..trials {
        let through = trial % 2 == 1;
        let trap = family.sample(&mut rng);
        let key = PauliOperator::random(trap.len(), &mut rng);
        let kind = if through { PairKind::ThroughAuth { trap: trap.clone(), key: key.clone() } } else { PairKind::Plain };
        let mut s = StateVector::zero(1)?;
        for g in &psi_prep {
            s.apply_gate(g)?;
        }
        let pair = prepare_pair(&mut s, &kind, 1)?;
        let ud = PauliKind::ALL[rng.gen_range(0..4)];
        let uin = PauliKind::ALL[rng.gen_range(0..4)];
        let uout = PauliOperator::random(pair.far.len(), &mut rng);
        s.apply_pauli(&PauliOperator::single(s.n(), 0, ud))?;
        s.apply_pauli(&PauliOperator::single(s.n(), pair.near[0], uin))?;
        s.apply_pauli(&uout.embed(s.n(), &pair.far))?;
        let t = bell_teleport(&mut s, &[0], &pair, &mut rng)?;

        let mut v = circuit_unitary(1, &psi_prep) * DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        // U_In^T on a single Pauli is ±U_In
        v = one(uin) * t.to_dense() * one(ud) * v;
        let full = if through {
            let mut amps = vec![C64::new(0.0, 0.0); 1 << trap.len()];
            amps[0] = v[0];
            amps[1 << trap.data_phys()] = v[1];
            key.to_dense() * circuit_unitary(trap.len(), &trap.encoder_gates()) * DVector::from_vec(amps)
        } else {
            v
        };
        let full = uout.to_dense() * full;
        worst = worst.min(fidelity_pure(&full, &s.density_of(&pair.far)?));
    }
    Ok(worst)
}

pub(super) fn teleport_check(config: &ExperimentConfig) -> Result<SuiteOutput, HarnessError> {
    let trials = config.samples.teleports;
    let tol = &config.tolerances;
    let mut out = SuiteOutput::default();

    let (gap, outcomes) = plain(trials, config.seed)?;
    out.check(Check::new("plain_output_gap", gap, Relation::Le, tol.statevector, Ensemble::Sampled));
    out.check(Check::new("plain_outcomes_seen", outcomes as f64, Relation::Eq, 16.0, Ensemble::Sampled));

    let family = config.code.family()?;
    let dev = through_auth(&family, trials, config.seed)?;
    out.check(Check::new("through_auth_stabilizer_deviation", dev, Relation::Le, tol.exact, Ensemble::Sampled));

    let f = attack_identity(trials, config.seed)?;
    out.check(Check::new("attack_identity_min_fidelity", f, Relation::Ge, 1.0 - tol.statevector, Ensemble::Sampled));
    out.record("trials", &trials)?;
    out.record("block_len", &family.block_len())?;
    Ok(out)
}
