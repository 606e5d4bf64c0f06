//! Fixed-width bit patterns used for circuit inputs, outputs and keys.
//!
//! Bit `i` of a pattern is the value of the `i`-th net of the corresponding
//! ordered net list. The textual form lists bit 0 first, so `"00100"` has
//! only bit 2 set. Hex form packs bit 0 into the least significant position
//! of the last hex digit, i.e. it reads as an integer whose bit `i` is bit `i`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Pattern {
    len: usize,
    words: Vec<u64>,
}

impl Pattern {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut p = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            p.set(i, b);
        }
        p
    }

    /// Low `len` bits of `value`, bit 0 first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let mut p = Self::zeros(len);
        if len > 0 {
            p.words[0] = if len == 64 { value } else { value & ((1u64 << len) - 1) };
        }
        p
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(len);
        for w in p.words.iter_mut() {
            *w = rng.gen();
        }
        p.mask_tail();
        p
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for width {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for width {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }

    /// Value as an integer; only valid for widths up to 64.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64, "pattern of width {} does not fit u64", self.len);
        self.words.first().copied().unwrap_or(0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming(&self, other: &Pattern) -> usize {
        assert_eq!(self.len, other.len, "hamming distance of unequal widths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Sub-pattern `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Pattern {
        let mut out = Pattern::zeros(len);
        for i in 0..len {
            out.set(i, self.get(start + i));
        }
        out
    }

    pub fn concat(&self, other: &Pattern) -> Pattern {
        let mut out = Pattern::zeros(self.len + other.len);
        for (i, b) in self.iter().chain(other.iter()).enumerate() {
            out.set(i, b);
        }
        out
    }

    pub fn to_hex(&self) -> String {
        if self.len == 0 {
            return "0".to_string();
        }
        let digits = self.len.div_ceil(4);
        let mut s = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let mut nibble = 0u32;
            for b in 0..4 {
                let i = d * 4 + b;
                if i < self.len && self.get(i) {
                    nibble |= 1 << b;
                }
            }
            s.push(char::from_digit(nibble, 16).unwrap());
        }
        s
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

/// Lexicographic order on the textual form (bit 0 is most significant).
impl Ord for Pattern {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter()).then(self.len.cmp(&other.len))
    }
}

impl PartialOrd for Pattern {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern({self})")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid bit pattern character {0:?}")]
pub struct ParsePatternError(char);

impl FromStr for Pattern {
    type Err = ParsePatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ParsePatternError(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Pattern::from_bools(&bits))
    }
}

impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Pattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
