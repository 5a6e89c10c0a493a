//! `qotp-run`, `qotp-attack` and `sim-compare`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{AdversarySpec, ProgramDescriptor};
use super::report::{Check, Ensemble, Relation, SuiteOutput};
use super::{ExperimentConfig, HarnessError};
use crate::dense::trace_distance;
use crate::pauli::{Gate, PauliKind, PauliOperator, C64};
use crate::qotp::protocol::{FinalKeyAudit, RoundRecord};
use crate::qotp::{
    attack_epsilon, audit_final_key, compile_controlled_program, prepare_sender_message, run_receiver, Adversary,
    AttackTarget, Comparison, EnvRegisters, Honest, PauliAttack, QotpSetup, SenderKeys,
};
use crate::rng::{child_rng, child_seeds, stream_rng, Stream};
use crate::sim::{Backend, BackendKind, QuantumState, StateVector};
use crate::stats::wilson;
use crate::trap::TrapFamily;

/// Wires of the environment: `A`, then `B`, then the purification `W` of `B`.
fn environment(kind: BackendKind, a: usize, b: usize) -> Result<(QuantumState, EnvRegisters), HarnessError> {
    let mut s = QuantumState::zero(kind, a + 2 * b)?;
    for i in 0..b {
        s.apply_gate(&Gate::H(a + b + i))?;
        s.apply_gate(&Gate::Cnot(a + b + i, a + i))?;
    }
    Ok((s, EnvRegisters { a: (0..a).collect(), b: (a..a + b).collect(), w: (a + b..a + 2 * b).collect() }))
}

fn backend_for(gates: &[Gate]) -> BackendKind {
    if gates.iter().any(|g| matches!(g, Gate::T(_))) {
        BackendKind::Sum
    } else {
        BackendKind::Tab
    }
}

struct Prepared {
    family: TrapFamily,
    setup: QotpSetup,
    base: Vec<Gate>,
    kind: BackendKind,
}

fn prepare(desc: &ProgramDescriptor) -> Result<Prepared, HarnessError> {
    let family = desc.code.family()?;
    let base = desc.gates()?;
    let program = compile_controlled_program(desc.registers()?, &base)?;
    let kind = backend_for(&program.controlled);
    Ok(Prepared { setup: QotpSetup::new(family.clone(), program, desc.mode()), family, base, kind })
}

struct Run {
    audit: FinalKeyAudit,
    rounds: Vec<RoundRecord>,
    /// State of `(B_out, W)` after the run.
    rho: Option<DMatrix<C64>>,
    /// `|1 − ⟨g⟩|` over the forwarded Choi stabilizers, when the channel is Clifford.
    stabilizer_dev: Option<f64>,
    qubits: usize,
}

/// Stabilizers of the ideal output on `(B, W)`, as operators on `2b` qubits.
fn choi_stabilizers(base: &[Gate], b: usize) -> Option<Vec<PauliOperator>> {
    if base.iter().any(|g| matches!(g, Gate::T(_))) {
        return None;
    }
    let mut gens = Vec::new();
    for i in 0..b {
        for k in [PauliKind::Z, PauliKind::X] {
            let mut g = PauliOperator::single(2 * b, i, k);
            g.set_kind(b + i, k);
            for gate in base {
                g.conjugate_forward_gate(gate);
            }
            gens.push(g);
        }
    }
    Some(gens)
}

fn one_run(p: &Prepared, adversary: &mut dyn Adversary, seed: u64, keep_density: bool) -> Result<Run, HarnessError> {
    let regs = p.setup.program.registers;
    let mut key_rng = child_rng(seed);
    let mut rng = stream_rng(seed, Stream::Outcomes);
    let keys = SenderKeys::random(&p.family, &p.setup.program, &mut key_rng);
    let (mut state, env) = environment(p.kind, regs.a, regs.b)?;
    let (mut msg, verifier) = prepare_sender_message(&p.setup, &keys, &mut state, &env.a, &mut rng)?;
    let out = run_receiver(&p.setup.program, &mut msg, &mut state, &env, adversary, &mut rng)?;
    let audit = audit_final_key(&verifier, &out.t_in, &out)?;
    let kept: Vec<usize> = out.output.iter().chain(&env.w).copied().collect();
    let stabilizer_dev = match (regs.a + regs.e == 0).then(|| choi_stabilizers(&p.base, regs.b)).flatten() {
        Some(gens) => {
            let mut worst = 0.0f64;
            for g in gens {
                let e = state.expectation(&g.embed(state.n(), &kept))?;
                worst = worst.max((e - C64::new(1.0, 0.0)).norm());
            }
            Some(worst)
        }
        None => None,
    };
    let rho = if keep_density { Some(state.density_of(&kept)?) } else { None };
    Ok(Run { audit, rounds: out.rounds, rho, stabilizer_dev, qubits: state.n() })
}

/// Ideal `(B, W)` state: the channel on the `B` half of a maximally entangled pair, with
/// `A` and `E` starting in `|0⟩` and traced out.
fn ideal_output(desc: &ProgramDescriptor, base: &[Gate]) -> Result<DMatrix<C64>, HarnessError> {
    let regs = desc.registers()?;
    let width = regs.width();
    let mut s = StateVector::zero(width + regs.b)?;
    for (i, wire) in regs.b_wires().enumerate() {
        s.apply_gate(&Gate::H(width + i))?;
        s.apply_gate(&Gate::Cnot(width + i, wire))?;
    }
    for g in base {
        s.apply_gate(g)?;
    }
    let kept: Vec<usize> = regs.b_wires().chain(width..width + regs.b).collect();
    Ok(s.density_of(&kept)?)
}

#[derive(Serialize)]
struct DensityRecord {
    qubits: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

fn density_record(rho: &DMatrix<C64>) -> DensityRecord {
    let rows = |f: fn(&C64) -> f64| (0..rho.nrows()).map(|r| (0..rho.ncols()).map(|c| f(&rho[(r, c)])).collect()).collect();
    DensityRecord { qubits: rho.nrows().trailing_zeros() as usize, re: rows(|z| z.re), im: rows(|z| z.im) }
}

pub(super) fn qotp_run(config: &ExperimentConfig) -> Result<SuiteOutput, HarnessError> {
    let desc = config.program_or_default();
    let p = prepare(&desc)?;
    let tol = &config.tolerances;
    let value_tol = match p.kind {
        BackendKind::Tab => tol.exact,
        _ => tol.stabilizer_sum,
    };
    let ideal = ideal_output(&desc, &p.base)?;
    let seeds = child_seeds(&mut stream_rng(config.seed ^ desc.seed, Stream::Keys), config.samples.runs.max(1));
    let runs: Vec<Run> = seeds.par_iter().map(|&s| one_run(&p, &mut Honest, s, true)).collect::<Result<_, _>>()?;

    let rejected = runs.iter().filter(|r| !r.audit.accept).count();
    let mismatched = runs.iter().filter(|r| !r.audit.matches).count();
    let distance = runs.iter().filter_map(|r| r.rho.as_ref()).map(|rho| trace_distance(rho, &ideal)).fold(0.0, f64::max);
    let mut out = SuiteOutput::default();
    out.check(Check::new("honest_rejections", rejected as f64, Relation::Eq, 0.0, Ensemble::Sampled));
    out.check(Check::new("final_key_mismatches", mismatched as f64, Relation::Eq, 0.0, Ensemble::Sampled));
    if let Some(dev) = runs.iter().map(|r| r.stabilizer_dev).collect::<Option<Vec<f64>>>() {
        let worst = dev.into_iter().fold(0.0, f64::max);
        out.check(Check::new("output_stabilizer_deviation", worst, Relation::Le, value_tol, Ensemble::Sampled));
    }
    let td_tol = if p.kind == BackendKind::Tab { tol.statevector } else { tol.stabilizer_sum };
    out.check(Check::new("output_trace_distance", distance, Relation::Le, td_tol, Ensemble::Sampled));
    // a pure target makes Tr(ρσ) the fidelity
    if ((&ideal * &ideal).trace().re - 1.0).abs() <= tol.statevector {
        let fidelity = runs.iter().filter_map(|r| r.rho.as_ref()).map(|rho| (rho * &ideal).trace().re).fold(1.0, f64::min);
        out.check(Check::new("output_fidelity", fidelity, Relation::Ge, 1.0 - tol.statevector, Ensemble::Sampled));
    }

    out.record("backend", &p.kind)?;
    out.record("controlled_gates", &p.setup.program.controlled.len())?;
    out.record("qubits", &runs[0].qubits)?;
    out.record("transcript", &runs[0].rounds)?;
    out.record("audit", &runs[0].audit)?;
    if let Some(rho) = &runs[0].rho {
        out.record("output_density", &density_record(rho))?;
    }
    Ok(out)
}

fn attack_of(spec: &AdversarySpec) -> Result<Box<dyn Adversary + Send>, HarnessError> {
    Ok(match spec {
        AdversarySpec::Honest => Box::new(Honest),
        AdversarySpec::Pauli { target, pauli } => Box::new(PauliAttack { target: target.clone(), pauli: pauli.parse()? }),
    })
}

/// Exact rejection probability of a single-letter attack on one block, when it has one.
fn exact_rejection(family: &TrapFamily, spec: &AdversarySpec) -> Result<Option<f64>, HarnessError> {
    let Some(q) = spec.pauli()? else { return Ok(None) };
    if !matches!(spec, AdversarySpec::Pauli { target: AttackTarget::Block(_), .. }) || q.n() != family.block_len() {
        return Ok(None);
    }
    let letters: Vec<PauliKind> = (0..q.n()).map(|i| q.kind(i)).filter(|k| *k != PauliKind::I).collect();
    match letters.first() {
        Some(&l) if letters.iter().all(|k| *k == l) => {
            let (_, accept, total) = family.exact_uniform_letter_counts(l, letters.len())?;
            Ok(Some(1.0 - accept as f64 / total as f64))
        }
        _ => Ok(None),
    }
}

#[derive(Serialize)]
struct AttackRecord {
    adversary: String,
    runs: u64,
    rejected: u64,
    ci_lo: f64,
    ci_hi: f64,
    exact: Option<f64>,
}

pub(super) fn qotp_attack(config: &ExperimentConfig) -> Result<SuiteOutput, HarnessError> {
    let desc = config.program_or_default();
    let p = prepare(&desc)?;
    let d = p.family.base().distance();
    let bound = 1.0 - (2.0f64 / 3.0).powf(d as f64 / 2.0);
    let mut out = SuiteOutput::default();
    let mut records = Vec::new();
    let mut seed_rng = stream_rng(config.seed ^ desc.seed, Stream::Adversary);
    for (i, spec) in config.adversaries_or_default().iter().enumerate() {
        let seeds = child_seeds(&mut seed_rng, config.samples.runs.max(1));
        let rejected: u64 = seeds
            .par_iter()
            .map(|&s| -> Result<u64, HarnessError> {
                let mut adv = attack_of(spec)?;
                Ok(u64::from(!one_run(&p, adv.as_mut(), s, false)?.audit.accept))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        let n = seeds.len() as u64;
        let (lo, hi) = wilson(rejected, n, config.tolerances.ci_z);
        let label = format!("{i}_{}", spec.label().replace([' ', '/', '+'], "_"));
        if spec != &AdversarySpec::Honest {
            out.check(Check::new(format!("rejection_ci_lo_{label}"), lo, Relation::Ge, bound, Ensemble::Sampled));
        }
        let exact = exact_rejection(&p.family, spec)?;
        if let Some(x) = exact {
            out.check(Check::new(format!("exact_rejection_ge_ci_lo_{label}"), x, Relation::Ge, lo, Ensemble::Sampled));
            out.check(Check::new(format!("exact_rejection_le_ci_hi_{label}"), x, Relation::Le, hi, Ensemble::Sampled));
        }
        records.push(AttackRecord { adversary: spec.label(), runs: n, rejected, ci_lo: lo, ci_hi: hi, exact });
    }
    out.record("backend", &p.kind)?;
    out.record("attacks", &records)?;
    Ok(out)
}

#[derive(Serialize)]
struct CompareRecord {
    adversary: String,
    epsilon: f64,
    trace_distance: f64,
    permutations: usize,
    hull_dim: usize,
}

pub(super) fn sim_compare(config: &ExperimentConfig) -> Result<SuiteOutput, HarnessError> {
    let desc = config.program_or_default();
    let family = desc.code.family()?;
    let program = compile_controlled_program(desc.registers()?, &desc.gates()?)?;
    let cmp = Comparison::new(family.clone(), program)?;
    let mut out = SuiteOutput::default();
    let mut records = Vec::new();
    for (i, spec) in config.adversaries_or_default().iter().enumerate() {
        let eps = match spec {
            AdversarySpec::Pauli { target: AttackTarget::Block(_), pauli } => attack_epsilon(&family, &pauli.parse()?)?,
            _ => 0.0,
        };
        let report = match spec {
            AdversarySpec::Honest => cmp.trace_distance(&|| Box::new(Honest))?,
            AdversarySpec::Pauli { target, pauli } => {
                let attack = PauliAttack { target: target.clone(), pauli: pauli.parse()? };
                cmp.trace_distance(&move || Box::new(attack.clone()))?
            }
        };
        let label = format!("{i}_{}", spec.label().replace([' ', '/', '+'], "_"));
        out.check(Check::new(
            format!("trace_distance_{label}"),
            report.trace_distance,
            Relation::Le,
            2.0 * eps + config.tolerances.statevector,
            Ensemble::Exhaustive,
        ));
        records.push(CompareRecord {
            adversary: spec.label(),
            epsilon: eps,
            trace_distance: report.trace_distance,
            permutations: report.permutations,
            hull_dim: report.hull_dim,
        });
    }
    out.record("comparisons", &records)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choi_stabilizers_of_cnot_pair() {
        let gens = choi_stabilizers(&[Gate::Cnot(0, 1)], 2).unwrap();
        let texts: Vec<String> = gens.iter().map(PauliOperator::to_text).collect();
        assert_eq!(texts, ["+ZIZI", "+XXXI", "+ZZIZ", "+IXIX"]);
    }

    #[test]
    fn ideal_output_is_pure_for_clifford() {
        let desc = ProgramDescriptor::new(&["H 0"], super::super::config::CodeConfig::toy(), None);
        let rho = ideal_output(&desc, &desc.gates().unwrap()).unwrap();
        assert!(((&rho * &rho).trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
