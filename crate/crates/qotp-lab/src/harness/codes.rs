//! `twirl-check` and `trap-security`.

use rayon::prelude::*;
use serde::Serialize;

use super::report::{Check, Ensemble, Relation, SuiteOutput, SweepRow};
use super::{ExperimentConfig, HarnessError};
use crate::dense::max_abs_diff;
use crate::pauli::{PauliKind, PauliOperator};
use crate::rng::{child_rng, child_seeds, stream_rng, Stream};
use crate::trap::{estimate_attack_security, random_attack, SecurityEstimate, TrapFamily, Verdict};
use crate::twirl::{haar_unitary, pauli_channel, pauli_coefficients, random_density, twirl};

const TWIRL_QUBITS: usize = 2;
/// Most attacks the exhaustive low-weight check will enumerate.
const MAX_LOW_WEIGHT_ATTACKS: usize = 1 << 20;

pub(super) fn twirl_check(config: &ExperimentConfig) -> Result<SuiteOutput, HarnessError> {
    let mut rng = stream_rng(config.seed, Stream::Sampling);
    let dim = 1 << TWIRL_QUBITS;
    let mut deviations = Vec::with_capacity(config.samples.unitaries);
    let mut norm_dev = 0.0f64;
    for _ in 0..config.samples.unitaries {
        let u = haar_unitary(dim, &mut rng);
        let rho = random_density(dim, &mut rng);
        let alpha = pauli_coefficients(&u);
        norm_dev = norm_dev.max((alpha.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs());
        deviations.push(max_abs_diff(&twirl(&u, &rho), &pauli_channel(&alpha, &rho)));
    }
    let worst = deviations.iter().copied().fold(0.0, f64::max);
    let tol = config.tolerances.twirl;
    let mut out = SuiteOutput::default();
    out.check(Check::new("twirl_max_deviation", worst, Relation::Le, tol, Ensemble::Exhaustive));
    out.check(Check::new("pauli_weights_sum_to_one", norm_dev, Relation::Le, tol, Ensemble::Exhaustive));
    out.record("qubits", &TWIRL_QUBITS)?;
    out.record("deviations", &deviations)?;
    Ok(out)
}

/// Every Pauli of weight `1..=max_weight` on `len` qubits.
fn low_weight_paulis(len: usize, max_weight: usize) -> Vec<PauliOperator> {
    fn extend(len: usize, start: usize, left: usize, cur: &mut PauliOperator, out: &mut Vec<PauliOperator>) {
        if left == 0 {
            return;
        }
        for q in start..len {
            for k in [PauliKind::X, PauliKind::Y, PauliKind::Z] {
                cur.set_kind(q, k);
                out.push(cur.clone());
                extend(len, q + 1, left - 1, cur, out);
            }
            cur.set_kind(q, PauliKind::I);
        }
    }
    let mut out = Vec::new();
    extend(len, 0, max_weight, &mut PauliOperator::identity(len), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Serialize)]
struct EstimateRecord {
    attack: String,
    weight: usize,
    nontrivial: u64,
    accepted: u64,
    samples: u64,
    eps_hat: f64,
    ci_lo: f64,
    ci_hi: f64,
}

impl From<&SecurityEstimate> for EstimateRecord {
    fn from(e: &SecurityEstimate) -> Self {
        EstimateRecord {
            attack: e.attack.to_text(),
            weight: e.weight,
            nontrivial: e.nontrivial,
            accepted: e.accepted,
            samples: e.samples,
            eps_hat: e.eps_hat,
            ci_lo: e.ci_lo,
            ci_hi: e.ci_hi,
        }
    }
}

fn row(family: &TrapFamily, e: &SecurityEstimate, bound: f64) -> SweepRow {
    SweepRow {
        base_code: family.base().name().to_string(),
        d: family.base().distance(),
        attack_weight: e.weight,
        samples: e.samples,
        eps_hat: e.eps_hat,
        ci_lo: e.ci_lo,
        ci_hi: e.ci_hi,
        bound,
    }
}

pub(super) fn trap_security(config: &ExperimentConfig) -> Result<SuiteOutput, HarnessError> {
    let family = config.code.family()?;
    let len = family.block_len();
    let d = family.base().distance();
    let bound = (2.0f64 / 3.0).powf(d as f64 / 2.0);
    let mut out = SuiteOutput::default();
    out.record("block_len", &len)?;
    out.record("distance", &d)?;

    // below the distance no attack is ever accepted nontrivially
    let max_w = d.saturating_sub(1);
    let expected: f64 = (1..=max_w).map(|w| binomial(len, w) * 3f64.powi(w as i32)).sum();
    if expected > MAX_LOW_WEIGHT_ATTACKS as f64 {
        return Err(HarnessError::Capability(format!("{expected} attacks of weight <= {max_w}")));
    }
    let attacks = low_weight_paulis(len, max_w);
    let mut perm_rng = stream_rng(config.seed, Stream::Keys);
    let seeds = child_seeds(&mut perm_rng, config.samples.permutations);
    let nontrivial: Result<Vec<u64>, HarnessError> = seeds
        .par_iter()
        .map(|&s| {
            let trap = family.sample(&mut child_rng(s));
            let mut count = 0;
            for q in &attacks {
                if trap.classify(q)?.verdict == Verdict::NontrivialAccept {
                    count += 1;
                }
            }
            Ok(count)
        })
        .collect();
    let nontrivial: u64 = nontrivial?.into_iter().sum();
    out.record("low_weight_attacks", &attacks.len())?;
    out.record("low_weight_permutations", &config.samples.permutations)?;
    out.check(Check::new(
        format!("nontrivial_accepts_weight_le_{max_w}"),
        nontrivial as f64,
        Relation::Eq,
        0.0,
        Ensemble::Sampled,
    ));

    let mut rng = stream_rng(config.seed, Stream::Sampling);
    let mut records = Vec::new();
    for &w in &config.samples.weights {
        let mut worst: Option<SecurityEstimate> = None;
        for &kind in &config.samples.kinds {
            for _ in 0..config.samples.attacks {
                let q = random_attack(len, w, kind, &mut rng)?;
                let e = estimate_attack_security(&family, &q, config.samples.trials, &mut rng)?;
                out.rows.push(row(&family, &e, bound));
                records.push(EstimateRecord::from(&e));
                if worst.as_ref().is_none_or(|b| e.eps_hat > b.eps_hat) {
                    worst = Some(e);
                }
            }
        }
        if let Some(e) = worst {
            out.check(Check::new(format!("worst_eps_hat_weight_{w}"), e.eps_hat, Relation::Le, bound, Ensemble::Sampled));
            out.check(Check::new(format!("worst_ci_hi_weight_{w}"), e.ci_hi, Relation::Lt, bound, Ensemble::Sampled));
        }
    }

    // X on n positions: exact count over all placements against Monte-Carlo
    let n = family.base().n();
    let (nt, _, total) = family.exact_uniform_letter_counts(PauliKind::X, n)?;
    let exact = nt as f64 / total as f64;
    let q = PauliOperator::x_on(len, &(0..n).collect::<Vec<_>>());
    let e = estimate_attack_security(&family, &q, config.samples.trials, &mut rng)?;
    out.rows.push(row(&family, &e, bound));
    records.push(EstimateRecord::from(&e));
    out.check(Check::new("transversal_x_exact_eps", exact, Relation::Le, bound, Ensemble::Exhaustive));
    out.check(Check::new("transversal_x_exact_ge_ci_lo", exact, Relation::Ge, e.ci_lo, Ensemble::Sampled));
    out.check(Check::new("transversal_x_exact_le_ci_hi", exact, Relation::Le, e.ci_hi, Ensemble::Sampled));
    out.record("transversal_x_counts", &(nt, total))?;
    out.record("estimates", &records)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_weight_enumeration_counts() {
        let all = low_weight_paulis(5, 2);
        assert_eq!(all.len(), 15 + 10 * 9);
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), all.len());
        assert!(all.iter().all(|p| (1..=2).contains(&p.weight())));
    }
}
