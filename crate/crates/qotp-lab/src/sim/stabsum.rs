use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::statevector::{StateVector, MAX_SV_QUBITS};
use super::tableau::{density_from_expectations, Decomposition, StabilizerTableau};
use super::{check_gate, Backend, Pick, SimError, SingleMeasurement};
use crate::pauli::{flip_bit, get_bit, i_pow, words_for, Gate, PauliKind, PauliOperator, C64};

pub const MAX_SUM_QUBITS: usize = 1024;
pub const MAX_SUM_RANK: usize = 1024;

const PRUNE: f64 = 1e-28;

/// `Σ_b c_b · D_b|φ⟩` over one shared tableau.
///
/// `D_b` is the ascending product of the destabilizers selected by `b`. The
/// vectors `D_b|φ⟩` are orthonormal, so `Σ|c_b|²` is the squared norm.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerSum {
    tab: StabilizerTableau,
    terms: BTreeMap<Vec<u64>, C64>,
    rank_budget: usize,
}

fn parity_and(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum::<u32>() % 2 == 1
}

fn xor_into(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
}

/// Composes decompositions: `(i^λ1 D_β1 S_σ1)(i^λ2 D_β2 S_σ2)`.
fn compose(acc: &mut Decomposition, next: &Decomposition) {
    let cross = parity_and(&acc.sigma, &next.beta);
    acc.lambda = (acc.lambda + next.lambda + if cross { 2 } else { 0 }) & 3;
    xor_into(&mut acc.beta, &next.beta);
    xor_into(&mut acc.sigma, &next.sigma);
}

impl StabilizerSum {
    pub fn zero(n: usize) -> Result<Self, SimError> {
        if n > MAX_SUM_QUBITS {
            return Err(SimError::Capacity { backend: "sum", n, limit: MAX_SUM_QUBITS });
        }
        Ok(Self::from_tableau(StabilizerTableau::zero(n)?))
    }

    pub fn from_tableau(tab: StabilizerTableau) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![0u64; words_for(tab.n())], C64::new(1.0, 0.0));
        StabilizerSum { tab, terms, rank_budget: MAX_SUM_RANK }
    }

    pub(crate) fn from_parts(tab: StabilizerTableau, terms: Vec<(Vec<u64>, C64)>) -> Self {
        StabilizerSum { tab, terms: terms.into_iter().collect(), rank_budget: MAX_SUM_RANK }
    }

    pub fn with_rank_budget(mut self, budget: usize) -> Self {
        self.rank_budget = budget.min(MAX_SUM_RANK);
        self
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn rank_budget(&self) -> usize {
        self.rank_budget
    }

    pub fn tableau(&self) -> &StabilizerTableau {
        &self.tab
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u64], C64)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    fn normalize(&mut self) {
        let s = self.norm_sqr().sqrt();
        self.terms.retain(|_, c| c.norm_sqr() > PRUNE * s * s);
        for c in self.terms.values_mut() {
            *c /= s;
        }
    }

    /// `(αI + βR)` applied to the represented vector (not renormalized).
    fn combine(&mut self, alpha: C64, beta: C64, r: &PauliOperator) -> Result<(), SimError> {
        let d = self.tab.decompose(r);
        let mut out: BTreeMap<Vec<u64>, C64> = BTreeMap::new();
        for (b, c) in &self.terms {
            *out.entry(b.clone()).or_default() += alpha * c;
            let mut nb = b.clone();
            xor_into(&mut nb, &d.beta);
            let sign = if parity_and(b, &d.sigma) { 2 } else { 0 };
            *out.entry(nb).or_default() += beta * c * i_pow(d.lambda + sign);
        }
        out.retain(|_, c| c.norm_sqr() > PRUNE);
        if out.len() > self.rank_budget {
            return Err(SimError::RankBudget { rank: out.len(), limit: self.rank_budget });
        }
        self.terms = out;
        Ok(())
    }

    fn z_eigen_split(&self, q: usize) -> (f64, Decomposition) {
        let z = PauliOperator::single(self.tab.n(), q, PauliKind::Z);
        let d = self.tab.decompose(&z);
        let p1 = self
            .terms
            .iter()
            .filter(|(b, _)| (d.lambda == 2) ^ parity_and(b, &d.sigma))
            .map(|(_, c)| c.norm_sqr())
            .sum::<f64>();
        (p1, d)
    }

    /// Terms of `Π_m` applied to the state, expressed over `collapsed` (the tableau
    /// collapsed with outcome 0 on pivot `p`).
    fn project_random(
        &self,
        q: usize,
        p: usize,
        g_in_new: &Decomposition,
        dp_in_new: &Decomposition,
        m: bool,
    ) -> BTreeMap<Vec<u64>, C64> {
        let n = self.tab.n();
        let w = words_for(n);
        let anti: Vec<bool> = (0..n).map(|i| self.tab.destab[i].x_bit(q)).collect();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut out: BTreeMap<Vec<u64>, C64> = BTreeMap::new();
        for (b, c) in &self.terms {
            let mut acc = Decomposition { beta: vec![0; w], sigma: vec![0; w], lambda: 0 };
            let mut flip = m;
            for i in 0..n {
                if !get_bit(b, i) {
                    continue;
                }
                flip ^= anti[i];
                if i == p {
                    compose(&mut acc, dp_in_new);
                } else {
                    // old D_i = D'_i · D'_p^{anti_i}
                    let mut f = Decomposition { beta: vec![0; w], sigma: vec![0; w], lambda: 0 };
                    flip_bit(&mut f.beta, i);
                    if anti[i] {
                        flip_bit(&mut f.beta, p);
                    }
                    compose(&mut acc, &f);
                }
            }
            if flip {
                compose(&mut acc, g_in_new);
            }
            *out.entry(acc.beta).or_default() += c * i_pow(acc.lambda) * s;
        }
        out.retain(|_, c| c.norm_sqr() > PRUNE);
        out
    }

    pub(crate) fn grow_by(&mut self, k: usize) -> Result<(), SimError> {
        let n = self.tab.n() + k;
        if n > MAX_SUM_QUBITS {
            return Err(SimError::Capacity { backend: "sum", n, limit: MAX_SUM_QUBITS });
        }
        self.tab.grow_by(k);
        let w = words_for(n);
        let old = std::mem::take(&mut self.terms);
        self.terms = old
            .into_iter()
            .map(|(mut b, c)| {
                b.resize(w, 0);
                (b, c)
            })
            .collect();
        Ok(())
    }
}

impl Backend for StabilizerSum {
    fn n(&self) -> usize {
        self.tab.n()
    }

    fn apply_gate(&mut self, g: &Gate) -> Result<(), SimError> {
        check_gate(self.n(), g)?;
        match *g {
            Gate::T(q) => {
                // T = ((1+ω)/2)·I + ((1−ω)/2)·Z
                let w = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
                let one = C64::new(1.0, 0.0);
                let z = PauliOperator::single(self.n(), q, PauliKind::Z);
                self.combine((one + w) / 2.0, (one - w) / 2.0, &z)
            }
            _ => self.tab.apply_gate(g),
        }
    }

    fn apply_pauli(&mut self, p: &PauliOperator) -> Result<(), SimError> {
        self.tab.apply_pauli(p)
    }

    fn apply_combination(&mut self, alpha: C64, beta: C64, r: &PauliOperator) -> Result<(), SimError> {
        if r.n() != self.n() {
            return Err(SimError::Size(r.n(), self.n()));
        }
        self.combine(alpha, beta, r)?;
        self.normalize();
        Ok(())
    }

    fn measure(&mut self, q: usize, pick: Pick) -> Result<SingleMeasurement, SimError> {
        if q >= self.n() {
            return Err(SimError::OutOfRange(q, self.n()));
        }
        let total = self.norm_sqr();
        match self.tab.random_pivot(q) {
            None => {
                let (p1, d) = self.z_eigen_split(q);
                let p1 = p1 / total;
                let bit = match pick {
                    Pick::Random(u) => u < p1,
                    Pick::Forced(b) => b,
                };
                let prob = if bit { p1 } else { 1.0 - p1 };
                if prob <= 1e-15 {
                    return Err(SimError::ZeroProbability);
                }
                self.terms.retain(|b, _| ((d.lambda == 2) ^ parity_and(b, &d.sigma)) == bit);
                self.normalize();
                Ok(SingleMeasurement { bit, probability: prob })
            }
            Some(p) => {
                let old_dp = self.tab.destab[p].clone();
                let mut collapsed = self.tab.clone();
                collapsed.collapse_random(q, p, false);
                let w = words_for(self.n());
                let mut g_dec = Decomposition { beta: vec![0; w], sigma: vec![0; w], lambda: 0 };
                flip_bit(&mut g_dec.beta, p);
                let dp_dec = collapsed.decompose(&old_dp);
                let branch0 = self.project_random(q, p, &g_dec, &dp_dec, false);
                let p0 = branch0.values().map(|c| c.norm_sqr()).sum::<f64>() / total;
                let bit = match pick {
                    Pick::Random(u) => u < 1.0 - p0,
                    Pick::Forced(b) => b,
                };
                let (terms, prob) = if bit {
                    let b1 = self.project_random(q, p, &g_dec, &dp_dec, true);
                    (b1, 1.0 - p0)
                } else {
                    (branch0, p0)
                };
                if prob <= 1e-15 || terms.is_empty() {
                    return Err(SimError::ZeroProbability);
                }
                self.tab = collapsed;
                if bit {
                    // re-anchor on g|φ'⟩, which the tableau with −Z_q stabilizes
                    let s = &mut self.tab.stab[p];
                    s.set_phase_exp(s.phase_exp() + 2);
                    self.terms = terms
                        .into_iter()
                        .map(|(mut b, c)| {
                            flip_bit(&mut b, p);
                            (b, c)
                        })
                        .collect();
                } else {
                    self.terms = terms;
                }
                self.normalize();
                Ok(SingleMeasurement { bit, probability: prob })
            }
        }
    }

    fn expectation(&self, p: &PauliOperator) -> Result<C64, SimError> {
        if p.n() != self.n() {
            return Err(SimError::Size(p.n(), self.n()));
        }
        let d = self.tab.decompose(p);
        let mut acc = C64::new(0.0, 0.0);
        for (b, c) in &self.terms {
            let mut nb = b.clone();
            xor_into(&mut nb, &d.beta);
            if let Some(c2) = self.terms.get(&nb) {
                let sign = if parity_and(b, &d.sigma) { 2 } else { 0 };
                acc += c2.conj() * c * i_pow(d.lambda + sign);
            }
        }
        Ok(acc / self.norm_sqr())
    }

    fn density_of(&self, keep: &[usize]) -> Result<DMatrix<C64>, SimError> {
        super::check_keep(self.n(), keep)?;
        if self.n() <= super::DENSE_CONVERSION_QUBITS {
            return self.to_statevector()?.density_of(keep);
        }
        density_from_expectations(self.n(), keep, |p| self.expectation(p).unwrap_or_default())
    }

    fn append_qubits(&mut self, k: usize) -> Result<std::ops::Range<usize>, SimError> {
        let start = self.n();
        self.grow_by(k)?;
        Ok(start..self.n())
    }

    fn to_statevector(&self) -> Result<StateVector, SimError> {
        if self.n() > MAX_SV_QUBITS {
            return Err(SimError::Capacity { backend: "sv", n: self.n(), limit: MAX_SV_QUBITS });
        }
        let phi = self.tab.to_statevector()?;
        let mut acc = vec![C64::new(0.0, 0.0); 1 << self.n()];
        for (b, c) in &self.terms {
            let mut v = phi.clone();
            v.apply_pauli(&self.tab.destab_product(b))?;
            for (a, x) in acc.iter_mut().zip(v.amplitudes()) {
                *a += c * x;
            }
        }
        let mut out = StateVector::from_amplitudes(acc)?;
        out.normalize();
        Ok(out)
    }
}
