//! Packed GF(2) vectors and matrices.

use crate::pauli::{get_bit, set_bit, words_for};

/// Bit vector over GF(2), packed in 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { len, words: vec![0; words_for(len)] }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Parses `"0101"`: character `i` is bit `i`.
    pub fn parse(s: &str) -> Option<Self> {
        let mut v = BitVec::zeros(s.len());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => v.set(i, true),
                _ => return None,
            }
        }
        Some(v)
    }

    pub fn from_words(len: usize, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), words_for(len));
        BitVec { len, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        get_bit(&self.words, i)
    }

    pub fn set(&mut self, i: usize, v: bool) {
        set_bit(&mut self.words, i, v)
    }

    pub fn flip(&mut self, i: usize) {
        crate::pauli::flip_bit(&mut self.words, i)
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut v = self.clone();
        v.xor_assign(other);
        v
    }

    pub fn dot(&self, other: &BitVec) -> bool {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum::<u32>() % 2 == 1
    }

    pub fn ones(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn to_string_bits(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    /// Concatenation `self ‖ other`.
    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut v = BitVec::zeros(self.len + other.len);
        for i in self.ones() {
            v.set(i, true);
        }
        for i in other.ones() {
            v.set(self.len + i, true);
        }
        v
    }

    /// Bits at `positions`, in order.
    pub fn select(&self, positions: &[usize]) -> BitVec {
        let mut v = BitVec::zeros(positions.len());
        for (i, &p) in positions.iter().enumerate() {
            v.set(i, self.get(p));
        }
        v
    }
}

impl serde::Serialize for BitVec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string_bits())
    }
}

impl<'de> serde::Deserialize<'de> for BitVec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BitVec::parse(&s).ok_or_else(|| serde::de::Error::custom("expected a string of 0 and 1"))
    }
}

/// Row-major GF(2) matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVec>,
}

impl BitMatrix {
    pub fn new(cols: usize, rows: Vec<BitVec>) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols));
        BitMatrix { cols, rows }
    }

    pub fn parse_rows(rows: &[&str]) -> Option<Self> {
        let parsed: Option<Vec<BitVec>> = rows.iter().map(|r| BitVec::parse(r)).collect();
        let parsed = parsed?;
        let cols = parsed.first().map(|r| r.len()).unwrap_or(0);
        if parsed.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(BitMatrix { cols, rows: parsed })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    /// `M·v`.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            out.set(i, r.dot(v));
        }
        out
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> BitVec {
        let mut out = BitVec::zeros(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            out.set(i, r.get(j));
        }
        out
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (BitMatrix, Vec<usize>) {
        let mut rows = self.rows.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            let Some(p) = (r..rows.len()).find(|&i| rows[i].get(c)) else { continue };
            rows.swap(r, p);
            for i in 0..rows.len() {
                if i != r && rows[i].get(c) {
                    let pivot_row = rows[r].clone();
                    rows[i].xor_assign(&pivot_row);
                }
            }
            pivots.push(c);
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        rows.truncate(r);
        (BitMatrix { cols: self.cols, rows }, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// True iff `v` lies in the row space.
    pub fn in_rowspace(&self, v: &BitVec) -> bool {
        let (red, piv) = self.rref();
        let mut w = v.clone();
        for (row, &c) in red.rows.iter().zip(&piv) {
            if w.get(c) {
                w.xor_assign(row);
            }
        }
        w.is_zero()
    }

    /// Some `x` with `M·x = target`, if one exists.
    pub fn solve(&self, target: &BitVec) -> Option<BitVec> {
        // eliminate on [M | target] tracked row by row
        let m = self.rows.len();
        let mut rows: Vec<(BitVec, bool)> = self.rows.iter().cloned().zip(target.to_bools()).collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            let Some(p) = (r..m).find(|&i| rows[i].0.get(c)) else { continue };
            rows.swap(r, p);
            for i in 0..m {
                if i != r && rows[i].0.get(c) {
                    let (pr, pb) = rows[r].clone();
                    rows[i].0.xor_assign(&pr);
                    rows[i].1 ^= pb;
                }
            }
            pivots.push(c);
            r += 1;
        }
        if rows[r..].iter().any(|(_, b)| *b) {
            return None;
        }
        let mut x = BitVec::zeros(self.cols);
        for (i, &c) in pivots.iter().enumerate() {
            x.set(c, rows[i].1);
        }
        Some(x)
    }

    pub fn transpose(&self) -> BitMatrix {
        let rows = (0..self.cols).map(|j| self.column(j)).collect();
        BitMatrix { cols: self.rows.len(), rows }
    }

    /// `self · otherᵀ`.
    pub fn mul_transpose(&self, other: &BitMatrix) -> BitMatrix {
        let rows = self.rows.iter().map(|r| other.mul_vec(r)).collect();
        BitMatrix { cols: other.rows.len(), rows }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.is_zero())
    }

    /// Basis of `{x : M·x = 0}`.
    pub fn nullspace(&self) -> Vec<BitVec> {
        let (red, piv) = self.rref();
        (0..self.cols)
            .filter(|c| !piv.contains(c))
            .map(|free| {
                let mut x = BitVec::zeros(self.cols);
                x.set(free, true);
                for (row, &p) in red.rows.iter().zip(&piv) {
                    if row.get(free) {
                        x.set(p, true);
                    }
                }
                x
            })
            .collect()
    }

    /// Stacks rows of `other` below `self`.
    pub fn vstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols);
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        BitMatrix { cols: self.cols, rows }
    }

    /// Columns reordered so that new column `j` is old column `positions[j]`.
    pub fn select_columns(&self, positions: &[usize]) -> BitMatrix {
        BitMatrix { cols: positions.len(), rows: self.rows.iter().map(|r| r.select(positions)).collect() }
    }

    /// Places the columns into a wider matrix: old column `j` becomes column `positions[j]`.
    pub fn spread_columns(&self, width: usize, positions: &[usize]) -> BitMatrix {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut v = BitVec::zeros(width);
                for j in r.ones() {
                    v.set(positions[j], true);
                }
                v
            })
            .collect();
        BitMatrix { cols: width, rows }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn nullspace_is_kernel_of_full_dimension(bits in proptest::collection::vec(any::<bool>(), 24)) {
            let rows: Vec<BitVec> = bits.chunks(6).map(BitVec::from_bools).collect();
            let m = BitMatrix::new(6, rows);
            let ns = m.nullspace();
            prop_assert_eq!(ns.len() + m.rank(), 6);
            for x in &ns {
                prop_assert!(m.mul_vec(x).is_zero());
            }
            prop_assert_eq!(BitMatrix::new(6, ns.clone()).rank(), ns.len());
        }
    }

    #[test]
    fn hamming_rank_and_solve() {
        let h = BitMatrix::parse_rows(&["0001111", "0110011", "1010101"]).unwrap();
        assert_eq!(h.rank(), 3);
        let t = BitVec::parse("101").unwrap();
        let x = h.solve(&t).unwrap();
        assert_eq!(h.mul_vec(&x), t);
        assert!(h.in_rowspace(&BitVec::parse("0111100").unwrap()));
        assert!(!h.in_rowspace(&BitVec::parse("1111111").unwrap()));
    }

    proptest! {
        #[test]
        fn solve_is_consistent(rows in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 10), 1..6), x in proptest::collection::vec(any::<bool>(), 10)) {
            let m = BitMatrix::new(10, rows.iter().map(|r| BitVec::from_bools(r)).collect());
            let t = m.mul_vec(&BitVec::from_bools(&x));
            let sol = m.solve(&t).unwrap();
            prop_assert_eq!(m.mul_vec(&sol), t);
        }
    }
}
