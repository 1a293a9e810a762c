use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A point of the hypercube {0,1}^n, packed into 64-bit words.
///
/// The same type doubles as a coordinate-set mask: bit `i` set means
/// coordinate `i` belongs to the set. Unused high bits of the last word are
/// always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    n: usize,
    words: Vec<u64>,
}

fn word_count(n: usize) -> usize {
    n.div_ceil(64)
}

impl BitVector {
    pub fn zeros(n: usize) -> Self {
        BitVector { n, words: vec![0; word_count(n)] }
    }

    pub fn ones(n: usize) -> Self {
        let mut v = BitVector { n, words: vec![u64::MAX; word_count(n)] };
        v.clear_tail();
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.words[i / 64] |= 1 << (i % 64);
            }
        }
        v
    }

    /// Builds a mask over `n` coordinates with the given indices set.
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut v = Self::zeros(n);
        for &i in indices {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            v.words[i / 64] |= 1 << (i % 64);
        }
        Ok(v)
    }

    /// Low `n` bits of `value`, bit `i` of the integer becoming coordinate `i`.
    pub fn from_u64(n: usize, value: u64) -> Self {
        assert!(n <= 64, "from_u64 supports n <= 64");
        let mut v = Self::zeros(n);
        if n > 0 {
            v.words[0] = value;
            v.clear_tail();
        }
        v
    }

    /// Inverse of [`BitVector::from_u64`] for n <= 64.
    pub fn to_u64(&self) -> u64 {
        assert!(self.n <= 64, "to_u64 supports n <= 64");
        self.words.first().copied().unwrap_or(0)
    }

    fn clear_tail(&mut self) {
        let rem = self.n % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.n);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.n, "index {i} out of range for dimension {}", self.n);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    /// Hamming weight W(x).
    #[inline]
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// W_I(x) where `mask` encodes I. Dimensions must agree.
    #[inline]
    pub fn weight_on(&self, mask: &BitVector) -> usize {
        debug_assert_eq!(self.n, mask.n);
        self.words.iter().zip(&mask.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// True when some coordinate is set in both.
    #[inline]
    pub fn intersects(&self, other: &BitVector) -> bool {
        debug_assert_eq!(self.n, other.n);
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// True when every coordinate set in `self` is also set in `other`.
    #[inline]
    pub fn is_subset_of(&self, other: &BitVector) -> bool {
        debug_assert_eq!(self.n, other.n);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn and(&self, other: &BitVector) -> BitVector {
        debug_assert_eq!(self.n, other.n);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        BitVector { n: self.n, words }
    }

    pub fn or(&self, other: &BitVector) -> BitVector {
        debug_assert_eq!(self.n, other.n);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        BitVector { n: self.n, words }
    }

    pub fn and_not(&self, other: &BitVector) -> BitVector {
        debug_assert_eq!(self.n, other.n);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect();
        BitVector { n: self.n, words }
    }

    pub fn complement(&self) -> BitVector {
        let mut v = BitVector { n: self.n, words: self.words.iter().map(|w| !w).collect() };
        v.clear_tail();
        v
    }

    /// Concatenation `(self, other)`, `self` occupying the low coordinates.
    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut v = BitVector::zeros(self.n + other.n);
        for i in self.iter_ones() {
            v.set(i, true);
        }
        for i in other.iter_ones() {
            v.set(self.n + i, true);
        }
        v
    }

    /// Indices of the set coordinates in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter_ones().collect()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.get(i)).collect()
    }

    /// Compares the sorted index lists of two masks lexicographically,
    /// so that {0,5} < {1} and {} is smallest.
    pub fn cmp_lex_indices(&self, other: &BitVector) -> Ordering {
        let mut a = self.iter_ones();
        let mut b = other.iter_ones();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(x), Some(y)) if x != y => return x.cmp(&y),
                _ => {}
            }
        }
    }
}

impl PartialOrd for BitVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by dimension, then by the bitstring read left to right.
impl Ord for BitVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| {
            for i in 0..self.n {
                match (self.get(i), other.get(i)) {
                    (false, true) => return Ordering::Less,
                    (true, false) => return Ordering::Greater,
                    _ => {}
                }
            }
            Ordering::Equal
        })
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut v = BitVector::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                other => return Err(Error::Parse { line: 0, msg: format!("invalid bit character {other:?}") }),
            }
        }
        Ok(v)
    }
}

impl Serialize for BitVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// W_I(x) for an explicit index list, with range checking.
pub fn hamming_weight_on(x: &BitVector, indices: &[usize]) -> Result<usize> {
    let mask = BitVector::from_indices(x.len(), indices)?;
    Ok(x.weight_on(&mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    #[test]
    fn weights() {
        assert_eq!(hamming_weight_on(&bv("1111"), &[0, 1]).unwrap(), 2);
        assert_eq!(hamming_weight_on(&bv("0000"), &[0, 1, 2, 3]).unwrap(), 0);
        assert_eq!(hamming_weight_on(&bv("1010"), &[1, 3]).unwrap(), 0);
        assert!(matches!(hamming_weight_on(&bv("1010"), &[4]), Err(Error::IndexOutOfRange { index: 4, n: 4 })));
    }

    #[test]
    fn multiword() {
        let mut x = BitVector::zeros(130);
        x.set(0, true);
        x.set(64, true);
        x.set(129, true);
        assert_eq!(x.weight(), 3);
        assert_eq!(x.indices(), vec![0, 64, 129]);
        assert_eq!(x.complement().weight(), 127);
        assert_eq!(BitVector::ones(130).weight(), 130);
        let parsed: BitVector = x.to_string().parse().unwrap();
        assert_eq!(parsed, x);
    }

    #[test]
    fn lex_order_on_indices() {
        let a = BitVector::from_indices(6, &[0, 5]).unwrap();
        let b = BitVector::from_indices(6, &[1]).unwrap();
        let e = BitVector::zeros(6);
        assert_eq!(a.cmp_lex_indices(&b), Ordering::Less);
        assert_eq!(e.cmp_lex_indices(&a), Ordering::Less);
        assert_eq!(a.cmp_lex_indices(&a), Ordering::Equal);
    }

    #[test]
    fn concat_appends_high() {
        let x = bv("10");
        assert_eq!(x.concat(&x.complement()).to_string(), "1001");
    }
}
