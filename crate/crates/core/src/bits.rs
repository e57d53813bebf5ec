//! Fixed-length binary vectors.
//!
//! Bit `i` is printed as the `i`-th character of the textual form, so the
//! string `"1011"` has `x[0] = 1` and `x[1] = 0`. Ordering is lexicographic
//! over that textual form.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_len, Error, Result};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

/// A biometric feature vector (enrollment, genuine probe, attack probe).
pub type FeatureVector = BitVector;

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            v.set(i, true);
        }
        v
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut v = Self::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Builds the vector whose lexicographic rank among all `len`-bit vectors
    /// is `index`: bit 0 is the most significant bit of `index`.
    pub fn from_index(len: usize, index: u64) -> Self {
        assert!(len <= 64, "index form limited to 64 bits");
        let mut v = Self::zeros(len);
        for i in 0..len {
            v.set(i, (index >> (len - 1 - i)) & 1 == 1);
        }
        v
    }

    /// Inverse of [`BitVector::from_index`].
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= 64, "index form limited to 64 bits");
        (0..self.len).fold(0u64, |acc, i| (acc << 1) | self.get(i) as u64)
    }

    /// All `len`-bit vectors in lexicographic order.
    pub fn all(len: usize) -> impl Iterator<Item = BitVector> {
        assert!(len < 64, "cannot enumerate 2^{len} vectors");
        (0..(1u64 << len)).map(move |i| BitVector::from_index(len, i))
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut v = Self::zeros(len);
        for w in v.words.iter_mut() {
            *w = rng.gen();
        }
        v.mask_tail();
        v
    }

    /// Each bit independently 1 with probability `p`.
    pub fn bernoulli<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Self {
        if p == 0.5 {
            return Self::random(len, rng);
        }
        Self::from_bits((0..len).map(|_| rng.gen_bool(p)))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        check_len(self.len, other.len)?;
        let mut out = self.clone();
        out.xor_in_place(other);
        Ok(out)
    }

    /// XOR `other` into `self`. Panics on length mismatch.
    pub fn xor_in_place(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn hamming(&self, other: &BitVector) -> Result<usize> {
        check_len(self.len, other.len)?;
        Ok(self.hamming_unchecked(other))
    }

    pub(crate) fn hamming_unchecked(&self, other: &BitVector) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "dot of vectors with different lengths");
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn not(&self) -> BitVector {
        let mut out = self.clone();
        for w in out.words.iter_mut() {
            *w = !*w;
        }
        out.mask_tail();
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn concat(&self, other: &BitVector) -> BitVector {
        BitVector::from_bits(self.iter().chain(other.iter()))
    }

    /// Low word of the packed representation, for vectors of at most 64 bits.
    pub(crate) fn low_word(&self) -> u64 {
        debug_assert!(self.len <= 64);
        self.words.first().copied().unwrap_or(0)
    }

    fn mask_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl Ord for BitVector {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.words.iter().zip(&other.words) {
            let diff = a ^ b;
            if diff != 0 {
                let first = diff.trailing_zeros();
                return if (a >> first) & 1 == 0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for BitVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
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
        let s = s.trim();
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("unexpected character {other:?} in bit string"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitVector::from_bits(bits))
    }
}

impl Serialize for BitVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and presets; panics on malformed input.
pub fn bits(s: &str) -> BitVector {
    s.parse().expect("valid bit string")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_display() {
        let v = bits("1011");
        assert_eq!(v.len(), 4);
        assert!(v.get(0) && !v.get(1) && v.get(2) && v.get(3));
        assert_eq!(v.to_string(), "1011");
        assert!("10a1".parse::<BitVector>().is_err());
    }

    #[test]
    fn index_order_is_lexicographic() {
        let all: Vec<_> = BitVector::all(4).collect();
        assert_eq!(all[0].to_string(), "0000");
        assert_eq!(all[11].to_string(), "1011");
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
    }

    #[test]
    fn long_vectors_keep_tail_clean() {
        let v = BitVector::ones(70);
        assert_eq!(v.weight(), 70);
        assert_eq!(v.not().weight(), 0);
        assert!(BitVector::zeros(3).xor(&BitVector::zeros(4)).is_err());
    }

    proptest! {
        #[test]
        fn ordering_matches_string_ordering(a in 0u64..1024, b in 0u64..1024) {
            let (x, y) = (BitVector::from_index(10, a), BitVector::from_index(10, b));
            prop_assert_eq!(x.cmp(&y), x.to_string().cmp(&y.to_string()));
            prop_assert_eq!(x.to_index(), a);
        }

        #[test]
        fn hamming_is_weight_of_xor(a in 0u64..4096, b in 0u64..4096) {
            let (x, y) = (BitVector::from_index(12, a), BitVector::from_index(12, b));
            prop_assert_eq!(x.hamming(&y).unwrap(), x.xor(&y).unwrap().weight());
        }
    }
}
