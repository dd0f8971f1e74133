//! Packed bit arrays: 64 bits per word, bit `i` lives in word `i / 64` at
//! position `i % 64` (least significant first).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitCode {
    words: Vec<u64>,
    len: usize,
}

pub(crate) const fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitCode {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for b in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if b {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        Self { words, len }
    }

    /// Parses a string of '0' / '1' characters, first character = bit 0.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Validation(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bools)
    }

    /// Builds from raw words; fails if any bit past `len` is set.
    pub fn from_words(words: Vec<u64>, len: usize) -> Result<Self> {
        if words.len() != words_for(len) {
            return Err(Error::shape(words_for(len), words.len()));
        }
        let code = Self { words, len };
        if code.words.last().is_some_and(|&w| w & !code.tail_mask() != 0) {
            return Err(Error::Validation("bits set beyond code length".into()));
        }
        Ok(code)
    }

    fn tail_mask(&self) -> u64 {
        match self.len % 64 {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        }
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
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// First `n` bits as a new code.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n > self.len {
            return Err(Error::Capability(format!(
                "requested {n} bits from a {}-bit code",
                self.len
            )));
        }
        let mut words = self.words[..words_for(n)].to_vec();
        if !n.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (n % 64)) - 1;
            }
        }
        Ok(Self { words, len: n })
    }

    /// Bits at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self::from_bools(indices.iter().map(|&i| self.get(i)))
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len != other.len {
            return Err(Error::shape(self.len, other.len));
        }
        Ok(())
    }

    /// Plain Hamming distance via popcount.
    pub fn hamming(&self, other: &Self) -> Result<u32> {
        self.check_len(other)?;
        Ok(hamming_words(&self.words, &other.words))
    }

    /// Bit-at-a-time Hamming distance; reference for the popcount path.
    pub fn hamming_scalar(&self, other: &Self) -> Result<u32> {
        self.check_len(other)?;
        Ok(self.iter().zip(other.iter()).filter(|(a, b)| a != b).count() as u32)
    }

    /// Calls `f(i)` for every position where the codes differ, ascending.
    pub(crate) fn for_each_diff(&self, other: &Self, mut f: impl FnMut(usize)) {
        for (w, (a, b)) in self.words.iter().zip(&other.words).enumerate() {
            let mut x = a ^ b;
            while x != 0 {
                f(w * 64 + x.trailing_zeros() as usize);
                x &= x - 1;
            }
        }
    }
}

#[inline]
pub fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

impl std::fmt::Display for BitCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bit_order_is_lsb_first() {
        let c = BitCode::from_bit_str("1010").unwrap();
        assert_eq!(c.words(), &[0b0101]);
        assert_eq!(c.to_string(), "1010");
    }

    #[test]
    fn tail_bits_rejected() {
        assert!(BitCode::from_words(vec![0b10000], 4).is_err());
        assert!(BitCode::from_words(vec![0b1000], 4).is_ok());
        assert!(BitCode::from_words(vec![1, 2], 64).is_err());
    }

    #[test]
    fn prefix_clears_tail() {
        let c = BitCode::from_bools(std::iter::repeat_n(true, 130));
        let p = c.prefix(70).unwrap();
        assert_eq!(p.count_ones(), 70);
        assert_eq!(p.words()[1], (1 << 6) - 1);
        assert!(c.prefix(131).is_err());
    }

    proptest! {
        #[test]
        fn popcount_matches_scalar(a in prop::collection::vec(any::<bool>(), 0..300), seed in any::<u64>()) {
            let b: Vec<bool> = a.iter().enumerate().map(|(i, &x)| x ^ ((seed >> (i % 64)) & 1 == 1)).collect();
            let (ca, cb) = (BitCode::from_bools(a), BitCode::from_bools(b));
            prop_assert_eq!(ca.hamming(&cb).unwrap(), ca.hamming_scalar(&cb).unwrap());
            let mut diffs = Vec::new();
            ca.for_each_diff(&cb, |i| diffs.push(i));
            prop_assert_eq!(diffs.len() as u32, ca.hamming(&cb).unwrap());
            prop_assert!(diffs.iter().all(|&i| ca.get(i) != cb.get(i)));
        }
    }
}
