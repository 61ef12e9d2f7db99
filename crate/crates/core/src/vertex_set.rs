//! Subsets of the vertex set `{0, .., n-1}` stored as a packed bitset.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    n: usize,
    words: Vec<u64>,
    len: usize,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            words: vec![0; n.div_ceil(64)],
            len: 0,
        }
    }

    pub fn full(n: usize) -> Self {
        let mut set = Self::empty(n);
        for v in 0..n {
            set.insert(v);
        }
        set
    }

    pub fn singleton(n: usize, v: usize) -> Result<Self> {
        Self::from_indices(n, [v])
    }

    /// Builds a set from indices; duplicates are rejected.
    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, indices: I) -> Result<Self> {
        let mut set = Self::empty(n);
        for v in indices {
            if v >= n {
                return Err(Error::VertexOutOfRange { index: v, n });
            }
            if !set.insert(v) {
                return Err(Error::InvalidParameter(format!("duplicate vertex {v} in vertex set")));
            }
        }
        Ok(set)
    }

    /// Interprets bit `i` of `mask` as membership of vertex `i` (requires n <= 64).
    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        if n > 64 {
            return Err(Error::SizeGuard {
                what: "bitmask vertex set",
                limit: 64,
                actual: n,
            });
        }
        if n < 64 && mask >> n != 0 {
            return Err(Error::VertexOutOfRange {
                index: 63 - mask.leading_zeros() as usize,
                n,
            });
        }
        let mut words = vec![0; n.div_ceil(64)];
        if let Some(w) = words.first_mut() {
            *w = mask;
        }
        Ok(Self {
            n,
            words,
            len: mask.count_ones() as usize,
        })
    }

    /// The set as a single word, when `n <= 64`.
    pub fn to_mask(&self) -> Option<u64> {
        (self.n <= 64).then(|| self.words.first().copied().unwrap_or(0))
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, v: usize) -> bool {
        v < self.n && self.words[v / 64] >> (v % 64) & 1 == 1
    }

    /// Returns `true` when `v` was not present before.
    pub fn insert(&mut self, v: usize) -> bool {
        assert!(v < self.n, "vertex {v} out of range for n = {}", self.n);
        let word = &mut self.words[v / 64];
        let bit = 1u64 << (v % 64);
        let fresh = *word & bit == 0;
        *word |= bit;
        self.len += fresh as usize;
        fresh
    }

    pub fn remove(&mut self, v: usize) -> bool {
        if v >= self.n {
            return false;
        }
        let word = &mut self.words[v / 64];
        let bit = 1u64 << (v % 64);
        let present = *word & bit != 0;
        *word &= !bit;
        self.len -= present as usize;
        present
    }

    pub fn complement(&self) -> Self {
        let mut out = Self::full(self.n);
        for (w, mine) in out.words.iter_mut().zip(&self.words) {
            *w &= !mine;
        }
        out.len = self.n - self.len;
        out
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_words(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_words(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_words(other, |a, b| a & !b)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + bit)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    fn zip_words(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.n, other.n, "vertex sets over different universes");
        let words: Vec<u64> = self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect();
        let len = words.iter().map(|w| w.count_ones() as usize).sum();
        Self { n: self.n, words, len }
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for VertexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_round_trip_and_membership() {
        let s = VertexSet::from_mask(6, 0b101001).unwrap();
        assert_eq!(s.to_vec(), vec![0, 3, 5]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.to_mask(), Some(0b101001));
        assert_eq!(s.complement().to_vec(), vec![1, 2, 4]);
    }

    #[test]
    fn rejects_out_of_range_and_duplicates() {
        assert!(VertexSet::from_indices(3, [0, 3]).is_err());
        assert!(VertexSet::from_indices(3, [1, 1]).is_err());
        assert!(VertexSet::from_mask(3, 0b1000).is_err());
    }

    #[test]
    fn large_universe_uses_multiple_words() {
        let s = VertexSet::from_indices(130, [0, 64, 129]).unwrap();
        assert_eq!(s.to_mask(), None);
        assert_eq!(s.complement().len(), 127);
        assert!(s.contains(129) && !s.contains(128));
    }
}
