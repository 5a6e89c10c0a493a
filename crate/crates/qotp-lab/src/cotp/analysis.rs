//! Exact comparison of the real program against the simulator for small
//! programs and a finite family of receiver strategies.
//!
//! MAC keys are enumerated with `b = 0`. Every carry a strategy submits is an
//! XOR shift `(Δc, Δt)` of the honest carry (or of zero when none exists), so
//! verification passes iff `poly_a(Δc) = Δt`, independently of `b`. Keys are
//! grouped by which of these equations they satisfy; class sizes come from
//! exhaustive enumeration over `a`, and each class is run once with a
//! representative key.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{bits_of, BrOtpIdeal, BrOtpSimulator, BrOtpSpec, Carried, CotpError, Gf2k, MacKey, RoundKeys, RoundOracle};
use crate::gf2::BitVec;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CarryPolicy {
    /// Latest carry produced by the previous round, if any.
    Honest,
    Omit,
    /// Honest carry (or all-zero) XOR-shifted.
    Shift { cipher: BitVec, tag: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub round: usize,
    pub b: BitVec,
    pub carry: CarryPolicy,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strategy {
    pub steps: Vec<Step>,
}

/// Receiver view: `m_i` per step, `None` for ⊥.
pub type Transcript = Vec<Option<BitVec>>;

pub type Distribution = BTreeMap<Transcript, f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum World {
    Real,
    Simulated,
}

/// Runs `strategy` against an oracle and records what the receiver sees.
pub fn run_strategy(oracle: &mut dyn RoundOracle, strategy: &Strategy, state_len: usize) -> Transcript {
    let mut last: HashMap<usize, Carried> = HashMap::new();
    strategy
        .steps
        .iter()
        .map(|st| {
            let prev = last.get(&(st.round.wrapping_sub(1))).cloned();
            let carried = match &st.carry {
                CarryPolicy::Omit => None,
                CarryPolicy::Honest => prev,
                CarryPolicy::Shift { cipher, tag } => {
                    let base = prev.unwrap_or(Carried { cipher: BitVec::zeros(state_len), tag: 0 });
                    Some(Carried { cipher: base.cipher.xor(cipher), tag: base.tag ^ tag })
                }
            };
            match oracle.query(st.round, &st.b, carried.as_ref()) {
                Ok(ans) => {
                    if let Some(c) = ans.next {
                        last.insert(st.round, c);
                    }
                    Some(ans.m)
                }
                Err(_) => None,
            }
        })
        .collect()
}

/// `poly_a(m)` with `b = 0`.
fn poly(field: Gf2k, a: u64, m: &BitVec) -> u64 {
    MacKey::new(field, a, 0).tag_blocks(m)
}

/// Key classes for one round: `(count, representative a)` per signature.
fn key_classes(field: Gf2k, conditions: &[(BitVec, u64)]) -> Result<Classes, CotpError> {
    if field.kappa() > 24 {
        return Err(CotpError::Kappa(field.kappa()));
    }
    let mut classes: BTreeMap<Vec<bool>, (u64, u64)> = BTreeMap::new();
    for a in 0..=field.mask() {
        let sig: Vec<bool> = conditions.iter().map(|(dc, dt)| poly(field, a, dc) == *dt).collect();
        classes.entry(sig).or_insert((0, a)).0 += 1;
    }
    Ok(classes.into_values().collect())
}

type Conditions = Vec<(BitVec, u64)>;
type Classes = Vec<(u64, u64)>;

/// Distinct shift equations checked against each round key.
fn strategy_conditions(rounds: usize, strategy: &Strategy) -> Vec<Conditions> {
    (1..rounds)
        .map(|i| {
            let mut conds: Conditions = strategy
                .steps
                .iter()
                .filter(|s| s.round == i + 1)
                .filter_map(|s| match &s.carry {
                    CarryPolicy::Shift { cipher, tag } => Some((cipher.clone(), *tag)),
                    _ => None,
                })
                .collect();
            conds.sort();
            conds.dedup();
            conds
        })
        .collect()
}

/// Exact transcript distribution of `strategy` in `world`.
pub fn exact_distribution(
    spec: &BrOtpSpec,
    a: &BitVec,
    field: Gf2k,
    strategy: &Strategy,
    world: World,
) -> Result<Distribution, CotpError> {
    let per_key = strategy_conditions(spec.len(), strategy)
        .iter()
        .map(|c| key_classes(field, c))
        .collect::<Result<Vec<_>, _>>()?;
    distribution_with_classes(spec, a, field, strategy, world, &per_key)
}

fn distribution_with_classes(
    spec: &BrOtpSpec,
    a: &BitVec,
    field: Gf2k,
    strategy: &Strategy,
    world: World,
    per_key: &[Classes],
) -> Result<Distribution, CotpError> {
    let state_len = spec.state_len;
    if state_len > 8 {
        return Err(CotpError::LengthMismatch { got: state_len, expected: 8 });
    }
    let size = (field.mask() as f64) + 1.0;
    let pads = 1u64 << state_len;
    let mut dist = Distribution::new();
    // mixed-radix counter over (class, pad) per key
    let radices: Vec<u64> = per_key.iter().map(|c| c.len() as u64 * pads).collect();
    let total: u64 = radices.iter().product();
    for mut idx in 0..total {
        let mut keys = Vec::with_capacity(per_key.len());
        let mut weight = 1.0;
        for (classes, &r) in per_key.iter().zip(&radices) {
            let digit = idx % r;
            idx /= r;
            let (count, rep) = classes[(digit / pads) as usize];
            weight *= count as f64 / size / pads as f64;
            keys.push(RoundKeys { pad: bits_of(digit % pads, state_len), mac: MacKey::new(field, rep, 0) });
        }
        let t = match world {
            World::Real => {
                let mut p = super::brotp_compile_with_keys(spec, a.clone(), keys);
                run_strategy(&mut p, strategy, state_len)
            }
            World::Simulated => {
                let ws = vec![BitVec::zeros(state_len); keys.len()];
                let mut s = BrOtpSimulator::with_randomness(BrOtpIdeal::new(spec.clone(), a.clone()), keys, ws);
                run_strategy(&mut s, strategy, state_len)
            }
        };
        *dist.entry(t).or_insert(0.0) += weight;
    }
    Ok(dist)
}

pub fn total_variation(p: &Distribution, q: &Distribution) -> f64 {
    let keys: std::collections::BTreeSet<&Transcript> = p.keys().chain(q.keys()).collect();
    0.5 * keys.into_iter().map(|k| (p.get(k).unwrap_or(&0.0) - q.get(k).unwrap_or(&0.0)).abs()).sum::<f64>()
}

/// Every query sequence of length ≤ `max_steps` over rounds `1..=rounds`,
/// every 1-bit input, and for later rounds every carry in
/// {honest, omitted, cipher flip, tag flip, both}.
pub fn exhaustive_strategies(rounds: usize, state_len: usize, max_steps: usize) -> Vec<Strategy> {
    let carries = |round: usize| -> Vec<CarryPolicy> {
        if round == 1 {
            return vec![CarryPolicy::Omit];
        }
        let e0 = bits_of(1, state_len);
        let zero = BitVec::zeros(state_len);
        vec![
            CarryPolicy::Honest,
            CarryPolicy::Omit,
            CarryPolicy::Shift { cipher: e0.clone(), tag: 0 },
            CarryPolicy::Shift { cipher: zero, tag: 1 },
            CarryPolicy::Shift { cipher: e0, tag: 1 },
        ]
    };
    let choices: Vec<Step> = (1..=rounds)
        .flat_map(|r| {
            let cs = carries(r);
            (0..2u64).flat_map(move |b| {
                cs.clone().into_iter().map(move |carry| Step { round: r, b: bits_of(b, 1), carry })
            })
        })
        .collect();
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<Step>> = vec![Vec::new()];
    for _ in 0..max_steps {
        let mut next = Vec::new();
        for seq in &frontier {
            for c in &choices {
                let mut s = seq.clone();
                s.push(c.clone());
                out.push(Strategy { steps: s.clone() });
                next.push(s);
            }
        }
        frontier = next;
    }
    out
}

/// Largest real-vs-simulated total variation over `strategies`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulatorReport {
    pub kappa: u32,
    pub strategies: usize,
    pub max_tv: f64,
    pub worst: Option<Strategy>,
}

pub fn simulator_report(
    spec: &BrOtpSpec,
    inputs: &[BitVec],
    field: Gf2k,
    strategies: &[Strategy],
) -> Result<SimulatorReport, CotpError> {
    use rayon::prelude::*;
    let conds: Vec<Vec<Conditions>> = strategies.iter().map(|st| strategy_conditions(spec.len(), st)).collect();
    let mut distinct: Vec<&Conditions> = conds.iter().flatten().collect();
    distinct.sort();
    distinct.dedup();
    let cache: HashMap<&Conditions, Classes> = distinct
        .into_par_iter()
        .map(|c| key_classes(field, c).map(|k| (c, k)))
        .collect::<Result<_, _>>()?;
    let results: Result<Vec<(f64, usize)>, CotpError> = strategies
        .par_iter()
        .enumerate()
        .map(|(k, st)| {
            let per_key: Vec<Classes> = conds[k].iter().map(|c| cache[c].clone()).collect();
            let mut worst = 0.0f64;
            for a in inputs {
                let real = distribution_with_classes(spec, a, field, st, World::Real, &per_key)?;
                let sim = distribution_with_classes(spec, a, field, st, World::Simulated, &per_key)?;
                worst = worst.max(total_variation(&real, &sim));
            }
            Ok((worst, k))
        })
        .collect();
    let results = results?;
    let best = results.iter().copied().fold((0.0, None), |acc, (tv, k)| if tv > acc.0 { (tv, Some(k)) } else { acc });
    Ok(SimulatorReport {
        kappa: field.kappa(),
        strategies: strategies.len(),
        max_tv: best.0,
        worst: best.1.map(|k| strategies[k].clone()),
    })
}
