use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{random_bits, CotpInstance, Gf2k, MacKey};
use crate::gf2::BitVec;

/// One round `g_i`. Round 1 receives `(a, b_1)`, later rounds `(b_i, s_{i-1})`;
/// each returns `(m_i, s_i)`. The state of the last round is ignored.
pub type RoundFn = Arc<dyn Fn(&BitVec, &BitVec) -> (BitVec, BitVec) + Send + Sync>;

/// Round functions plus the fixed carried-state length.
#[derive(Clone)]
pub struct BrOtpSpec {
    pub rounds: Vec<RoundFn>,
    pub state_len: usize,
}

impl BrOtpSpec {
    pub fn new(rounds: Vec<RoundFn>, state_len: usize) -> Self {
        BrOtpSpec { rounds, state_len }
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }
}

impl std::fmt::Debug for BrOtpSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BrOtpSpec").field("rounds", &self.rounds.len()).field("state_len", &self.state_len).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbortReason {
    Consumed = 1,
    OutOfOrder = 2,
    BadTag = 3,
    MissingState = 4,
    Absorbed = 5,
    UnknownRound = 6,
}

impl AbortReason {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            1 => AbortReason::Consumed,
            2 => AbortReason::OutOfOrder,
            3 => AbortReason::BadTag,
            4 => AbortReason::MissingState,
            5 => AbortReason::Absorbed,
            6 => AbortReason::UnknownRound,
            _ => return None,
        })
    }
}

/// Encrypted state with its tag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Carried {
    pub cipher: BitVec,
    pub tag: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundAnswer {
    pub m: BitVec,
    pub next: Option<Carried>,
}

/// Pad `k_0^i` and MAC key `k_1^i` of one round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundKeys {
    pub pad: BitVec,
    pub mac: MacKey,
}

impl RoundKeys {
    pub fn random<R: Rng + ?Sized>(field: Gf2k, state_len: usize, rng: &mut R) -> Self {
        RoundKeys { pad: random_bits(state_len, rng), mac: MacKey::random(field, rng) }
    }

    fn seal(&self, s: &BitVec) -> Carried {
        let cipher = s.xor(&self.pad);
        let tag = self.mac.tag_blocks(&cipher);
        Carried { cipher, tag }
    }

    fn open(&self, c: &Carried) -> Option<BitVec> {
        (c.cipher.len() == self.pad.len() && self.mac.tag_blocks(&c.cipher) == c.tag).then(|| c.cipher.xor(&self.pad))
    }
}

/// Receiver-side interface shared by the real program and the simulator.
pub trait RoundOracle {
    fn rounds(&self) -> usize;
    /// Round `i` is 1-based.
    fn query(&mut self, i: usize, b: &BitVec, carried: Option<&Carried>) -> Result<RoundAnswer, AbortReason>;
}

fn fit(s: BitVec, len: usize) -> BitVec {
    if s.len() == len {
        return s;
    }
    BitVec::from_bools(&(0..len).map(|i| i < s.len() && s.get(i)).collect::<Vec<_>>())
}

/// Key material embedded in `f_i`.
struct RoundSecrets {
    a: Option<BitVec>,
    prev: Option<RoundKeys>,
    cur: Option<RoundKeys>,
}

type RoundQuery = (BitVec, Option<Carried>);
type RoundCotp = CotpInstance<RoundSecrets, RoundQuery, Result<RoundAnswer, AbortReason>>;

/// The compiled program: one COTP per round.
pub struct BrOtpProgram {
    cotps: Vec<RoundCotp>,
    aborted: bool,
}

impl std::fmt::Debug for BrOtpProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BrOtpProgram").field("rounds", &self.cotps.len()).field("aborted", &self.aborted).finish()
    }
}

/// A round of a 1-bit program from a 4-entry table indexed by `x | y << 1`, where `x` is the
/// first argument and `y` the second. Entries pack the output as `m | s << 1`.
pub fn table_round(t: [u8; 4]) -> RoundFn {
    let bit = |v: &BitVec| !v.is_empty() && v.get(0);
    Arc::new(move |x: &BitVec, y: &BitVec| {
        let e = t[bit(x) as usize | (bit(y) as usize) << 1];
        (super::bits_of(e as u64 & 1, 1), super::bits_of(e as u64 >> 1, 1))
    })
}

/// Samples `ℓ - 1` round keys and compiles.
pub fn brotp_compile<R: Rng + ?Sized>(spec: &BrOtpSpec, a: BitVec, field: Gf2k, rng: &mut R) -> BrOtpProgram {
    let keys = (1..spec.len()).map(|_| RoundKeys::random(field, spec.state_len, rng)).collect();
    brotp_compile_with_keys(spec, a, keys)
}

/// Compiles with explicit keys; `keys[i-1]` protects the state leaving round `i`.
pub fn brotp_compile_with_keys(spec: &BrOtpSpec, a: BitVec, keys: Vec<RoundKeys>) -> BrOtpProgram {
    let l = spec.len();
    assert!(l >= 1, "a program needs at least one round");
    assert_eq!(keys.len(), l - 1, "one key pair per non-final round");
    let state_len = spec.state_len;
    let mut a = Some(a);
    let cotps = (0..l)
        .map(|idx| {
            let secrets = RoundSecrets {
                a: if idx == 0 { a.take() } else { None },
                prev: idx.checked_sub(1).map(|j| keys[j].clone()),
                cur: keys.get(idx).cloned(),
            };
            let g = spec.rounds[idx].clone();
            CotpInstance::new(secrets, move |sec: RoundSecrets, (b, carried): RoundQuery| {
                let (m, s) = match (&sec.a, &sec.prev) {
                    (Some(a), _) => g(a, &b),
                    (None, Some(prev)) => {
                        let c = carried.ok_or(AbortReason::MissingState)?;
                        let s_prev = prev.open(&c).ok_or(AbortReason::BadTag)?;
                        g(&b, &s_prev)
                    }
                    (None, None) => unreachable!("round without input or key"),
                };
                let next = sec.cur.as_ref().map(|k| k.seal(&fit(s, state_len)));
                Ok(RoundAnswer { m, next })
            })
        })
        .collect();
    BrOtpProgram { cotps, aborted: false }
}

impl BrOtpProgram {
    pub fn is_aborted(&self) -> bool {
        self.aborted
    }
}

impl RoundOracle for BrOtpProgram {
    fn rounds(&self) -> usize {
        self.cotps.len()
    }

    fn query(&mut self, i: usize, b: &BitVec, carried: Option<&Carried>) -> Result<RoundAnswer, AbortReason> {
        if self.aborted {
            return Err(AbortReason::Absorbed);
        }
        let out = match self.cotps.get_mut(i.wrapping_sub(1)) {
            None => Err(AbortReason::UnknownRound),
            Some(c) => c.execute((b.clone(), carried.cloned())).unwrap_or(Err(AbortReason::Consumed)),
        };
        if out.is_err() {
            self.aborted = true;
        }
        out
    }
}

/// Direct reference for the ideal bounded-round functionality.
pub struct BrOtpIdeal {
    spec: BrOtpSpec,
    a: Option<BitVec>,
    evaluated: Vec<bool>,
    state: Option<BitVec>,
    aborted: bool,
}

impl BrOtpIdeal {
    pub fn new(spec: BrOtpSpec, a: BitVec) -> Self {
        let l = spec.len();
        BrOtpIdeal { spec, a: Some(a), evaluated: vec![false; l], state: None, aborted: false }
    }

    pub fn rounds(&self) -> usize {
        self.spec.len()
    }

    pub fn execute(&mut self, i: usize, b: &BitVec) -> Result<BitVec, AbortReason> {
        let out = self.step(i, b);
        if out.is_err() {
            self.aborted = true;
            self.a = None;
            self.state = None;
        }
        out
    }

    fn step(&mut self, i: usize, b: &BitVec) -> Result<BitVec, AbortReason> {
        if self.aborted {
            return Err(AbortReason::Absorbed);
        }
        if i == 0 || i > self.spec.len() {
            return Err(AbortReason::UnknownRound);
        }
        if self.evaluated[i - 1] {
            return Err(AbortReason::Consumed);
        }
        if self.evaluated[..i - 1].iter().any(|&e| !e) {
            return Err(AbortReason::OutOfOrder);
        }
        let g = &self.spec.rounds[i - 1];
        let (m, s) = if i == 1 {
            g(self.a.as_ref().expect("sender input present before round 1"), b)
        } else {
            g(b, self.state.as_ref().expect("state present after round i-1"))
        };
        self.evaluated[i - 1] = true;
        if i == 1 {
            self.a = None;
        }
        self.state = (i < self.spec.len()).then(|| fit(s, self.spec.state_len));
        Ok(m)
    }
}

impl RoundOracle for BrOtpIdeal {
    fn rounds(&self) -> usize {
        self.spec.len()
    }

    fn query(&mut self, i: usize, b: &BitVec, _: Option<&Carried>) -> Result<RoundAnswer, AbortReason> {
        self.execute(i, b).map(|m| RoundAnswer { m, next: None })
    }
}

/// Simulates the real program from one-shot ideal access, encrypting random
/// states `w_i` in place of the real ones.
pub struct BrOtpSimulator {
    ideal: BrOtpIdeal,
    keys: Vec<RoundKeys>,
    ws: Vec<BitVec>,
    evaluated: Vec<bool>,
    aborted: bool,
}

impl BrOtpSimulator {
    pub fn new<R: Rng + ?Sized>(ideal: BrOtpIdeal, field: Gf2k, rng: &mut R) -> Self {
        let n = ideal.rounds().saturating_sub(1);
        let len = ideal.spec.state_len;
        let keys = (0..n).map(|_| RoundKeys::random(field, len, rng)).collect();
        let ws = (0..n).map(|_| random_bits(len, rng)).collect();
        Self::with_randomness(ideal, keys, ws)
    }

    pub fn with_randomness(ideal: BrOtpIdeal, keys: Vec<RoundKeys>, ws: Vec<BitVec>) -> Self {
        let l = ideal.rounds();
        assert_eq!(keys.len(), l - 1);
        assert_eq!(ws.len(), l - 1);
        BrOtpSimulator { ideal, keys, ws, evaluated: vec![false; l], aborted: false }
    }

    fn step(&mut self, i: usize, b: &BitVec, carried: Option<&Carried>) -> Result<RoundAnswer, AbortReason> {
        if self.aborted {
            return Err(AbortReason::Absorbed);
        }
        if i == 0 || i > self.evaluated.len() {
            return Err(AbortReason::UnknownRound);
        }
        if self.evaluated[i - 1] {
            return Err(AbortReason::Consumed);
        }
        self.evaluated[i - 1] = true;
        if self.evaluated[..i - 1].iter().any(|&e| !e) {
            return Err(AbortReason::OutOfOrder);
        }
        if i > 1 {
            let c = carried.ok_or(AbortReason::MissingState)?;
            self.keys[i - 2].open(c).ok_or(AbortReason::BadTag)?;
        }
        let m = self.ideal.execute(i, b)?;
        let next = self.keys.get(i - 1).map(|k| k.seal(&self.ws[i - 1]));
        Ok(RoundAnswer { m, next })
    }
}

impl RoundOracle for BrOtpSimulator {
    fn rounds(&self) -> usize {
        self.evaluated.len()
    }

    fn query(&mut self, i: usize, b: &BitVec, carried: Option<&Carried>) -> Result<RoundAnswer, AbortReason> {
        let out = self.step(i, b, carried);
        if out.is_err() {
            self.aborted = true;
        }
        out
    }
}

fn put_bits(out: &mut Vec<u8>, v: &BitVec) {
    out.extend_from_slice(&(v.len() as u32).to_be_bytes());
    let mut bytes = vec![0u8; v.len().div_ceil(8)];
    for i in v.ones() {
        bytes[i / 8] |= 1 << (i % 8);
    }
    out.extend_from_slice(&bytes);
}

fn take_bits(buf: &mut &[u8]) -> Option<BitVec> {
    let len = u32::from_be_bytes(buf.get(..4)?.try_into().ok()?) as usize;
    let nbytes = len.div_ceil(8);
    let bytes = buf.get(4..4 + nbytes)?;
    let v = BitVec::from_bools(&(0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect::<Vec<_>>());
    *buf = &buf[4 + nbytes..];
    Some(v)
}

/// Length-prefixed wire form; an abort is `0xFF` followed by its reason code.
pub fn encode_answer(ans: &Result<RoundAnswer, AbortReason>) -> Vec<u8> {
    match ans {
        Err(r) => vec![0xFF, r.code()],
        Ok(a) => {
            let mut out = Vec::new();
            put_bits(&mut out, &a.m);
            match &a.next {
                None => out.push(0),
                Some(c) => {
                    out.push(1);
                    put_bits(&mut out, &c.cipher);
                    out.extend_from_slice(&c.tag.to_be_bytes());
                }
            }
            out
        }
    }
}

pub fn decode_answer(bytes: &[u8]) -> Option<Result<RoundAnswer, AbortReason>> {
    if bytes.len() == 2 && bytes[0] == 0xFF {
        return AbortReason::from_code(bytes[1]).map(Err);
    }
    let mut buf = bytes;
    let m = take_bits(&mut buf)?;
    let (&flag, rest) = buf.split_first()?;
    buf = rest;
    let next = match flag {
        0 => None,
        1 => {
            let cipher = take_bits(&mut buf)?;
            let tag = u64::from_be_bytes(buf.get(..8)?.try_into().ok()?);
            buf = &buf[8..];
            Some(Carried { cipher, tag })
        }
        _ => return None,
    };
    buf.is_empty().then_some(Ok(RoundAnswer { m, next }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cotp::{bits_of, random_bits};
    use crate::rng::child_rng;

    fn three_round() -> BrOtpSpec {
        BrOtpSpec::new(vec![table_round([0, 3, 2, 1]), table_round([1, 2, 3, 0]), table_round([0, 1, 1, 0])], 1)
    }

    fn field16() -> Gf2k {
        Gf2k::new(16).unwrap()
    }

    #[test]
    fn single_round_is_one_cotp() {
        let spec = BrOtpSpec::new(vec![table_round([0, 1, 1, 0])], 1);
        let mut p = brotp_compile(&spec, bits_of(1, 1), field16(), &mut child_rng(1));
        let ans = p.query(1, &bits_of(0, 1), None).unwrap();
        assert_eq!(ans.m, bits_of(1, 1));
        assert!(ans.next.is_none());
        assert_eq!(p.query(1, &bits_of(0, 1), None), Err(AbortReason::Consumed));
        assert_eq!(p.query(1, &bits_of(0, 1), None), Err(AbortReason::Absorbed));
    }

    #[test]
    fn honest_chain_matches_ideal() {
        let mut rng = child_rng(2);
        for a in 0..2 {
            for bs in 0..8u64 {
                let mut real = brotp_compile(&three_round(), bits_of(a, 1), field16(), &mut rng);
                let mut ideal = BrOtpIdeal::new(three_round(), bits_of(a, 1));
                let mut carried = None;
                for i in 1..=3 {
                    let b = bits_of(bs >> (i - 1) & 1, 1);
                    let ans = real.query(i, &b, carried.as_ref()).unwrap();
                    assert_eq!(ans.m, ideal.execute(i, &b).unwrap());
                    assert_eq!(ans.next.is_some(), i < 3);
                    carried = ans.next;
                }
            }
        }
    }

    #[test]
    fn ideal_ordering_rules() {
        let mut f = BrOtpIdeal::new(three_round(), bits_of(0, 1));
        assert_eq!(f.execute(2, &bits_of(0, 1)), Err(AbortReason::OutOfOrder));
        assert_eq!(f.execute(1, &bits_of(0, 1)), Err(AbortReason::Absorbed));
        let mut f = BrOtpIdeal::new(three_round(), bits_of(0, 1));
        f.execute(1, &bits_of(0, 1)).unwrap();
        assert_eq!(f.execute(1, &bits_of(1, 1)), Err(AbortReason::Consumed));
    }

    #[test]
    fn out_of_order_real_query_aborts() {
        let mut p = brotp_compile(&three_round(), bits_of(0, 1), field16(), &mut child_rng(4));
        assert_eq!(p.query(2, &bits_of(0, 1), None), Err(AbortReason::MissingState));
        assert_eq!(p.query(1, &bits_of(0, 1), None), Err(AbortReason::Absorbed));
    }

    #[test]
    fn replaying_round_one_into_round_three_aborts() {
        let mut rng = child_rng(5);
        let mut rejected = 0;
        for _ in 0..200 {
            let mut p = brotp_compile(&three_round(), bits_of(1, 1), field16(), &mut rng);
            let c1 = p.query(1, &bits_of(0, 1), None).unwrap().next.unwrap();
            let c2 = p.query(2, &bits_of(1, 1), Some(&c1)).unwrap().next.unwrap();
            assert_ne!(c1, c2);
            if p.query(3, &bits_of(0, 1), Some(&c1)) == Err(AbortReason::BadTag) {
                rejected += 1;
            }
        }
        assert_eq!(rejected, 200);
    }

    #[test]
    fn bit_flip_rejected_at_forgery_rate() {
        let mut rng = child_rng(6);
        let spec = BrOtpSpec::new(vec![table_round([0, 3, 2, 1]), table_round([1, 2, 3, 0])], 16);
        let mut accepted = 0;
        let trials = 10_000;
        for t in 0..trials {
            let mut p = brotp_compile(&spec, bits_of(1, 1), field16(), &mut rng);
            let mut c = p.query(1, &bits_of(1, 1), None).unwrap().next.unwrap();
            c.cipher.flip(t % 16);
            if p.query(2, &bits_of(0, 1), Some(&c)).is_ok() {
                accepted += 1;
            }
        }
        // 2^-16 per trial: at most a handful over 10^4 trials
        assert!(accepted <= 2, "accepted {accepted}");
    }

    #[test]
    fn carried_ciphertext_is_uniform() {
        let mut rng = child_rng(7);
        let spec = BrOtpSpec::new(vec![table_round([2, 2, 2, 2]), table_round([0, 0, 0, 0])], 3);
        let mut counts = [0u32; 8];
        let n = 10_000;
        for _ in 0..n {
            let mut p = brotp_compile(&spec, bits_of(0, 1), field16(), &mut rng);
            let c = p.query(1, &bits_of(0, 1), None).unwrap().next.unwrap();
            let v = (0..3).filter(|&i| c.cipher.get(i)).fold(0usize, |acc, i| acc | 1 << i);
            counts[v] += 1;
        }
        let e = n as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 7 degrees of freedom, 99.9% quantile
        assert!(chi2 < 24.32, "chi2 {chi2}");
    }

    #[test]
    fn simulator_matches_real_for_honest_receiver() {
        let mut rng = child_rng(8);
        for a in 0..2 {
            let mut real = brotp_compile(&three_round(), bits_of(a, 1), field16(), &mut rng);
            let mut sim = BrOtpSimulator::new(BrOtpIdeal::new(three_round(), bits_of(a, 1)), field16(), &mut rng);
            let (mut cr, mut cs) = (None, None);
            for i in 1..=3 {
                let b = bits_of((i as u64) & 1, 1);
                let r = real.query(i, &b, cr.as_ref()).unwrap();
                let s = sim.query(i, &b, cs.as_ref()).unwrap();
                assert_eq!(r.m, s.m);
                cr = r.next;
                cs = s.next;
            }
        }
    }

    #[test]
    fn wire_round_trip() {
        let mut rng = child_rng(9);
        let ans = Ok(RoundAnswer {
            m: random_bits(13, &mut rng),
            next: Some(Carried { cipher: random_bits(70, &mut rng), tag: 0xDEAD_BEEF_0123_4567 }),
        });
        assert_eq!(decode_answer(&encode_answer(&ans)), Some(ans));
        let last = Ok(RoundAnswer { m: BitVec::zeros(0), next: None });
        assert_eq!(decode_answer(&encode_answer(&last)), Some(last));
        let abort = Err(AbortReason::BadTag);
        assert_eq!(encode_answer(&abort), vec![0xFF, 3]);
        assert_eq!(decode_answer(&[0xFF, 3]), Some(abort));
        assert_eq!(hex::encode(encode_answer(&Err(AbortReason::Consumed))), "ff01");
    }
}
