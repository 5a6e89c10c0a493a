//! `brotp-check`: the compiled bounded-round program against the ideal functionality.

use rand::Rng;
use serde::Serialize;

use super::report::{Check, Ensemble, Relation, SuiteOutput};
use super::{ExperimentConfig, HarnessError};
use crate::cotp::analysis::{exhaustive_strategies, simulator_report};
use crate::cotp::{bits_of, brotp_compile, exact_forgery_odds, table_round, BrOtpIdeal, BrOtpSpec, Gf2k, RoundOracle};
use crate::rng::{stream_rng, Stream};

const KAPPA: u32 = 16;
const FORGERY_KAPPA: u32 = 8;
const ROUNDS: usize = 3;

fn table_spec(tables: &[[u8; 4]]) -> BrOtpSpec {
    BrOtpSpec::new(tables.iter().map(|t| table_round(*t)).collect(), 1)
}

/// Honest chains that disagree with the ideal functionality, over every `(a, b₁b₂b₃)`.
fn honest_mismatches<R: Rng + ?Sized>(tables: &[[u8; 4]], field: Gf2k, rng: &mut R) -> usize {
    let mut bad = 0;
    for a in 0..2 {
        for bs in 0..1u64 << ROUNDS {
            let mut real = brotp_compile(&table_spec(tables), bits_of(a, 1), field, rng);
            let mut ideal = BrOtpIdeal::new(table_spec(tables), bits_of(a, 1));
            let mut carried = None;
            for i in 1..=ROUNDS {
                let b = bits_of(bs >> (i - 1) & 1, 1);
                match (real.query(i, &b, carried.as_ref()), ideal.execute(i, &b)) {
                    (Ok(ans), Ok(m)) if ans.m == m && ans.next.is_some() == (i < ROUNDS) => carried = ans.next,
                    _ => {
                        bad += 1;
                        break;
                    }
                }
            }
        }
    }
    bad
}

/// Every query order of length `1..=max_len` over the rounds.
fn query_orders(max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_len {
        frontier = frontier.iter().flat_map(|o| (1..=ROUNDS).map(move |r| [o.as_slice(), &[r]].concat())).collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

/// Query orders on which the real program's abort pattern or answers differ from the
/// ideal one. The receiver always forwards the latest carried state it holds.
fn order_mismatches<R: Rng + ?Sized>(tables: &[[u8; 4]], orders: &[Vec<usize>], field: Gf2k, rng: &mut R) -> usize {
    let mut bad = 0;
    for order in orders {
        let mut real = brotp_compile(&table_spec(tables), bits_of(1, 1), field, rng);
        let mut ideal = BrOtpIdeal::new(table_spec(tables), bits_of(1, 1));
        let mut carried = None;
        for (k, &i) in order.iter().enumerate() {
            let b = bits_of(k as u64 & 1, 1);
            let agree = match (real.query(i, &b, carried.as_ref()), ideal.execute(i, &b)) {
                (Ok(ans), Ok(m)) => {
                    let same = ans.m == m;
                    if ans.next.is_some() {
                        carried = ans.next;
                    }
                    same
                }
                (Err(_), Err(_)) => true,
                _ => false,
            };
            if !agree {
                bad += 1;
                break;
            }
        }
    }
    bad
}

#[derive(Serialize)]
struct ForgeryRecord {
    m: u64,
    m2: u64,
    best: f64,
    worst: f64,
}

pub(super) fn brotp_check(config: &ExperimentConfig) -> Result<SuiteOutput, HarnessError> {
    let field = Gf2k::new(KAPPA)?;
    let mut rng = stream_rng(config.seed, Stream::Keys);
    let mut sampling = stream_rng(config.seed, Stream::Sampling);
    let mut out = SuiteOutput::default();

    let programs: Vec<Vec<[u8; 4]>> = (0..config.samples.programs)
        .map(|_| (0..ROUNDS).map(|_| std::array::from_fn(|_| sampling.gen_range(0..4u8))).collect())
        .collect();
    let honest: usize = programs.iter().map(|t| honest_mismatches(t, field, &mut rng)).sum();
    out.check(Check::new("honest_chain_mismatches", honest as f64, Relation::Eq, 0.0, Ensemble::Sampled));

    let orders = query_orders(ROUNDS + 1);
    let ordering: usize = programs.iter().map(|t| order_mismatches(t, &orders, field, &mut rng)).sum();
    out.check(Check::new("query_order_mismatches", ordering as f64, Relation::Eq, 0.0, Ensemble::Sampled));
    out.record("query_orders", &orders.len())?;

    let small = Gf2k::new(FORGERY_KAPPA)?;
    let top = 1u64 << FORGERY_KAPPA;
    let mut pairs = vec![(0, 1), (1, 2), (0, top - 1), (3, 5)];
    while pairs.len() < 4 + config.samples.mac_pairs {
        let (m, m2) = (sampling.gen_range(0..top), sampling.gen_range(0..top));
        if m != m2 {
            pairs.push((m, m2));
        }
    }
    let mut records = Vec::new();
    for (m, m2) in pairs {
        let odds = exact_forgery_odds(small, m, m2)?;
        records.push(ForgeryRecord { m, m2, best: odds.best, worst: odds.worst });
    }
    let target = 1.0 / top as f64;
    let best = records.iter().map(|r| r.best).fold(0.0, f64::max);
    let worst = records.iter().map(|r| r.worst).fold(1.0, f64::min);
    out.check(Check::new("forgery_best_odds", best, Relation::Eq, target, Ensemble::Exhaustive));
    out.check(Check::new("forgery_worst_odds", worst, Relation::Eq, target, Ensemble::Exhaustive));
    out.record("forgery", &records)?;

    let spec = table_spec(&[[0, 2, 2, 1], [0, 1, 1, 0]]);
    let strategies = exhaustive_strategies(2, 1, 3);
    let report = simulator_report(&spec, &[bits_of(0, 1), bits_of(1, 1)], field, &strategies)?;
    let bound = 2f64.powi(1 - KAPPA as i32);
    out.check(Check::new("simulator_max_tv", report.max_tv, Relation::Le, bound, Ensemble::Exhaustive));
    out.record("simulator_strategies", &report.strategies)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_count() {
        assert_eq!(query_orders(4).len(), 3 + 9 + 27 + 81);
    }

    #[test]
    fn skipping_a_round_is_caught() {
        let mut rng = stream_rng(1, Stream::Keys);
        let tables = [[0, 3, 2, 1], [1, 2, 3, 0], [0, 1, 1, 0]];
        let orders = vec![vec![1, 3], vec![2], vec![1, 2, 2], vec![1, 2, 3, 1]];
        assert_eq!(order_mismatches(&tables, &orders, Gf2k::new(KAPPA).unwrap(), &mut rng), 0);
    }
}
