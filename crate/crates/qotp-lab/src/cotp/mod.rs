//! Classical one-time primitives: OTM tokens, a trusted COTP oracle,
//! the GF(2^κ) one-time MAC and the bounded-round one-time program.

mod brotp;
pub mod analysis;

pub use brotp::{
    brotp_compile, brotp_compile_with_keys, decode_answer, encode_answer, AbortReason, BrOtpIdeal,
    BrOtpProgram, BrOtpSimulator, BrOtpSpec, Carried, RoundAnswer, RoundFn, RoundKeys, RoundOracle, table_round,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::BitVec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CotpError {
    #[error("one-time object already consumed")]
    DoubleUse,
    #[error("message has {got} bits, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("unsupported field size κ={0}")]
    Kappa(u32),
}

/// One-time memory: holds two strings, releases exactly one.
#[derive(Debug, Clone)]
pub struct OtmToken {
    slots: Option<(BitVec, BitVec)>,
}

impl OtmToken {
    pub fn create(s0: BitVec, s1: BitVec) -> Self {
        OtmToken { slots: Some((s0, s1)) }
    }

    /// Returns `s_c` and erases both slots.
    pub fn execute(&mut self, c: bool) -> Result<BitVec, CotpError> {
        let (s0, s1) = self.slots.take().ok_or(CotpError::DoubleUse)?;
        Ok(if c { s1 } else { s0 })
    }

    pub fn is_consumed(&self) -> bool {
        self.slots.is_none()
    }
}

type CotpBody<A, B, O> = Box<dyn FnOnce(A, B) -> O + Send>;

/// Trusted one-shot oracle computing `f(a, b)` for a receiver-chosen `b`.
pub struct CotpInstance<A, B, O> {
    inner: Option<(A, CotpBody<A, B, O>)>,
}

impl<A, B, O> CotpInstance<A, B, O> {
    pub fn new(a: A, f: impl FnOnce(A, B) -> O + Send + 'static) -> Self {
        CotpInstance { inner: Some((a, Box::new(f))) }
    }

    /// Evaluates once; the sender input and the function are dropped.
    pub fn execute(&mut self, b: B) -> Result<O, CotpError> {
        let (a, f) = self.inner.take().ok_or(CotpError::DoubleUse)?;
        Ok(f(a, b))
    }

    pub fn is_consumed(&self) -> bool {
        self.inner.is_none()
    }
}

impl<A, B, O> std::fmt::Debug for CotpInstance<A, B, O> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CotpInstance").field("consumed", &self.is_consumed()).finish()
    }
}

/// GF(2^κ) with a fixed reduction polynomial; elements are the low κ bits of a `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gf2k {
    kappa: u32,
    /// Reduction polynomial without its leading `x^κ` term.
    low: u64,
}

impl Gf2k {
    pub fn new(kappa: u32) -> Result<Self, CotpError> {
        let low = match kappa {
            2 => 0b11,
            8 => 0x1B,
            16 => 0x100B,
            64 => 0x1B,
            _ => return Err(CotpError::Kappa(kappa)),
        };
        Ok(Gf2k { kappa, low })
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn mask(&self) -> u64 {
        if self.kappa == 64 {
            u64::MAX
        } else {
            (1u64 << self.kappa) - 1
        }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let top = self.kappa - 1;
        let mask = self.mask();
        let (mut a, mut b, mut r) = (a & mask, b & mask, 0u64);
        while b != 0 {
            if b & 1 == 1 {
                r ^= a;
            }
            b >>= 1;
            let carry = (a >> top) & 1 == 1;
            a = (a << 1) & mask;
            if carry {
                a ^= self.low;
            }
        }
        r
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen::<u64>() & self.mask()
    }
}

/// One-time MAC key `(a, b)`: `tag(m) = a·m + b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacKey {
    pub a: u64,
    pub b: u64,
    pub field: Gf2k,
}

impl MacKey {
    pub fn new(field: Gf2k, a: u64, b: u64) -> Self {
        MacKey { a: a & field.mask(), b: b & field.mask(), field }
    }

    pub fn random<R: Rng + ?Sized>(field: Gf2k, rng: &mut R) -> Self {
        let a = field.random(rng);
        let b = field.random(rng);
        MacKey { a, b, field }
    }

    /// Tag of a single κ-bit block given as a field element.
    pub fn tag_element(&self, m: u64) -> u64 {
        self.field.mul(self.a, m & self.field.mask()) ^ self.b
    }

    /// Tag of exactly κ bits.
    pub fn tag(&self, m: &BitVec) -> Result<u64, CotpError> {
        let k = self.field.kappa() as usize;
        if m.len() != k {
            return Err(CotpError::LengthMismatch { got: m.len(), expected: k });
        }
        Ok(self.tag_element(blocks(m, k)[0]))
    }

    pub fn verify(&self, m: &BitVec, tag: u64) -> Result<bool, CotpError> {
        Ok(self.tag(m)? == tag)
    }

    /// Polynomial MAC over κ-bit blocks: `Σ_j a^(t-j+1)·m_j + b`.
    /// A single block reduces to `a·m + b`.
    pub fn tag_blocks(&self, m: &BitVec) -> u64 {
        let k = self.field.kappa() as usize;
        let mut acc = 0u64;
        for blk in blocks(m, k) {
            acc = self.field.mul(acc ^ blk, self.a);
        }
        acc ^ self.b
    }
}

/// Success probabilities of forging a tag on `m2` after seeing the tag on `m`, from all
/// `2^{2κ}` keys. Conditioned on each observed tag, the forger picks the likeliest tag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForgeryOdds {
    /// Best over observed tags.
    pub best: f64,
    /// Worst over observed tags.
    pub worst: f64,
}

/// Largest κ accepted by [`exact_forgery_odds`].
pub const MAX_ENUMERATED_KAPPA: u32 = 8;

pub fn exact_forgery_odds(field: Gf2k, m: u64, m2: u64) -> Result<ForgeryOdds, CotpError> {
    if field.kappa() > MAX_ENUMERATED_KAPPA {
        return Err(CotpError::Kappa(field.kappa()));
    }
    let size = 1usize << field.kappa();
    let mut joint = vec![0u32; size * size];
    for a in 0..size as u64 {
        for b in 0..size as u64 {
            let key = MacKey::new(field, a, b);
            joint[key.tag_element(m) as usize * size + key.tag_element(m2) as usize] += 1;
        }
    }
    let (mut best, mut worst) = (0.0f64, 1.0f64);
    for row in joint.chunks(size) {
        let consistent: u32 = row.iter().sum();
        let p = *row.iter().max().expect("non-empty row") as f64 / consistent as f64;
        best = best.max(p);
        worst = worst.min(p);
    }
    Ok(ForgeryOdds { best, worst })
}

/// Splits `m` into κ-bit field elements, zero-padding the last block.
pub fn blocks(m: &BitVec, k: usize) -> Vec<u64> {
    let count = m.len().div_ceil(k).max(1);
    (0..count)
        .map(|j| {
            (0..k)
                .filter(|&i| j * k + i < m.len() && m.get(j * k + i))
                .fold(0u64, |acc, i| acc | (1u64 << i))
        })
        .collect()
}

/// `count` uniform bits.
pub fn random_bits<R: Rng + ?Sized>(count: usize, rng: &mut R) -> BitVec {
    BitVec::from_bools(&(0..count).map(|_| rng.gen::<bool>()).collect::<Vec<_>>())
}

/// Bit string of `len` bits holding the low bits of `value`.
pub fn bits_of(value: u64, len: usize) -> BitVec {
    BitVec::from_bools(&(0..len).map(|i| i < 64 && (value >> i) & 1 == 1).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::child_rng;

    /// GF(4) = {0, 1, x, x+1} written as 0..3, with x² = x + 1.
    const GF4_TABLE: [[u64; 4]; 4] = [[0, 0, 0, 0], [0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2]];

    #[test]
    fn gf4_matches_table() {
        let f = Gf2k::new(2).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(f.mul(a, b), GF4_TABLE[a as usize][b as usize]);
            }
        }
        // a = x, b = 1, m = x + 1: x·(x+1) = x² + x = 1, plus 1 is 0
        let key = MacKey::new(f, 2, 1);
        assert_eq!(key.tag(&bits_of(3, 2)).unwrap(), 0);
    }

    #[test]
    fn field_axioms_spot_checks() {
        let mut rng = child_rng(3);
        for kappa in [8, 16, 64] {
            let f = Gf2k::new(kappa).unwrap();
            for _ in 0..200 {
                let (a, b, c) = (f.random(&mut rng), f.random(&mut rng), f.random(&mut rng));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
                assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                assert_eq!(f.mul(a, 1), a);
            }
        }
    }

    #[test]
    fn gf256_is_a_field() {
        let f = Gf2k::new(8).unwrap();
        for a in 1..256u64 {
            assert_eq!((1..256u64).filter(|&b| f.mul(a, b) == 1).count(), 1);
        }
        // AES reference product
        assert_eq!(f.mul(0x57, 0x83), 0xC1);
    }

    #[test]
    fn gf65536_has_no_zero_divisors_for_generator_powers() {
        let f = Gf2k::new(16).unwrap();
        let mut seen = std::collections::HashSet::new();
        let mut p = 1u64;
        for _ in 0..5000 {
            assert!(seen.insert(p));
            p = f.mul(p, 2);
            assert_ne!(p, 0);
        }
    }

    #[test]
    fn zero_a_tags_to_b() {
        let f = Gf2k::new(8).unwrap();
        let key = MacKey::new(f, 0, 0x5A);
        for m in 0..256 {
            assert_eq!(key.tag(&bits_of(m, 8)).unwrap(), 0x5A);
        }
    }

    #[test]
    fn tag_length_checked() {
        let key = MacKey::new(Gf2k::new(8).unwrap(), 1, 2);
        assert_eq!(key.tag(&BitVec::zeros(7)), Err(CotpError::LengthMismatch { got: 7, expected: 8 }));
        assert!(key.verify(&bits_of(9, 8), key.tag_element(9)).unwrap());
    }

    #[test]
    fn single_block_poly_mac_is_affine_mac() {
        let f = Gf2k::new(16).unwrap();
        let key = MacKey::new(f, 0x1234, 0xBEEF);
        assert_eq!(key.tag_blocks(&bits_of(0x0F0F, 16)), key.tag_element(0x0F0F));
    }

    /// Maximized over the observed message, the forged message and the forged tag.
    #[test]
    fn forgery_probability_is_exactly_two_to_minus_kappa() {
        let f = Gf2k::new(8).unwrap();
        for m in [0u64, 1, 0x53] {
            for m2 in [0u64, 2, 0xFF] {
                if m2 == m {
                    continue;
                }
                let odds = exact_forgery_odds(f, m, m2).unwrap();
                assert_eq!((odds.best, odds.worst), (1.0 / 256.0, 1.0 / 256.0));
            }
        }
        // the same message is trivially forgeable
        assert_eq!(exact_forgery_odds(f, 5, 5).unwrap().best, 1.0);
    }

    #[test]
    fn otm_releases_one_slot() {
        let mut t = OtmToken::create(BitVec::parse("0").unwrap(), BitVec::parse("1").unwrap());
        assert_eq!(t.execute(false).unwrap().to_string_bits(), "0");
        assert_eq!(t.execute(true), Err(CotpError::DoubleUse));
        let mut rng = child_rng(11);
        for _ in 0..10_000 {
            let (s0, s1) = (random_bits(5, &mut rng), random_bits(5, &mut rng));
            let c: bool = rng.gen();
            let mut t = OtmToken::create(s0.clone(), s1.clone());
            assert_eq!(t.execute(c).unwrap(), if c { s1 } else { s0 });
            assert!(t.is_consumed());
        }
    }

    #[test]
    fn cotp_runs_once() {
        let mut c = CotpInstance::new(5u32, |a: u32, b: u32| a * b);
        assert_eq!(c.execute(3), Ok(15));
        assert_eq!(c.execute(3), Err(CotpError::DoubleUse));
    }
}
