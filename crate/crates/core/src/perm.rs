use num_bigint::BigUint;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bijection of `{0, ..., q-1}`; `image[i]` is where cell `i` goes.
///
/// Composition follows function notation: `a.compose(&b)` is `a ∘ b`,
/// i.e. apply `b` first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellPermutation {
    image: Vec<usize>,
}

/// Serialized form `{"image": [...], "cycles": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationJson {
    pub image: Vec<usize>,
    pub cycles: Vec<Vec<usize>>,
}

impl Serialize for CellPermutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PermutationJson { image: self.image.clone(), cycles: self.cycles() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CellPermutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PermutationJson::deserialize(d)?;
        CellPermutation::new(raw.image).map_err(serde::de::Error::custom)
    }
}

impl CellPermutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let q = image.len();
        let mut seen = vec![false; q];
        for &j in &image {
            if j >= q || seen[j] {
                return Err(Error::InvalidArgument(format!("image {j} repeated or out of range for q = {q}")));
            }
            seen[j] = true;
        }
        Ok(CellPermutation { image })
    }

    pub fn identity(q: usize) -> Self {
        CellPermutation { image: (0..q).collect() }
    }

    /// Builds a permutation from disjoint cycles; unlisted points are fixed.
    pub fn from_cycles(q: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut image: Vec<usize> = (0..q).collect();
        let mut touched = vec![false; q];
        for c in cycles {
            for (i, &x) in c.iter().enumerate() {
                if x >= q || touched[x] {
                    return Err(Error::InvalidArgument(format!("cycle entry {x} repeated or out of range")));
                }
                touched[x] = true;
                image[x] = c[(i + 1) % c.len()];
            }
        }
        Ok(CellPermutation { image })
    }

    /// The transposition exchanging `a` and `b`.
    pub fn transposition(q: usize, a: usize, b: usize) -> Self {
        let mut image: Vec<usize> = (0..q).collect();
        image.swap(a, b);
        CellPermutation { image }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn into_image(self) -> Vec<usize> {
        self.image
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &j) in self.image.iter().enumerate() {
            inv[j] = i;
        }
        CellPermutation { image: inv }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &CellPermutation) -> Self {
        assert_eq!(self.len(), other.len(), "composing permutations of different sizes");
        CellPermutation { image: other.image.iter().map(|&j| self.image[j]).collect() }
    }

    /// `self^k` for any `k >= 0`, computed cycle by cycle.
    pub fn pow(&self, k: u64) -> Self {
        let mut image = vec![0; self.len()];
        for cycle in self.cycles() {
            let l = cycle.len();
            let shift = (k % l as u64) as usize;
            for (i, &x) in cycle.iter().enumerate() {
                image[x] = cycle[(i + shift) % l];
            }
        }
        CellPermutation { image }
    }

    /// Disjoint cycles, each starting at its minimal element, ordered by that
    /// element. Fixed points are length-one cycles.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let q = self.len();
        let mut seen = vec![false; q];
        let mut out = Vec::new();
        for start in 0..q {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x);
                x = self.image[x];
            }
            out.push(cycle);
        }
        out
    }

    pub fn cycle_lengths(&self) -> Vec<usize> {
        self.cycles().iter().map(Vec::len).collect()
    }

    pub fn cycle_count(&self) -> usize {
        self.cycles().len()
    }

    pub fn is_cyclic(&self) -> bool {
        !self.is_empty() && self.cycle_count() == 1
    }

    /// Least common multiple of the cycle lengths.
    pub fn order(&self) -> BigUint {
        self.cycle_lengths()
            .into_iter()
            .fold(BigUint::from(1u32), |acc, l| acc.lcm(&BigUint::from(l)))
    }

    /// `cycle_id[x]` is the index in [`cycles`](Self::cycles) of the cycle
    /// containing `x`.
    pub fn cycle_ids(&self) -> Vec<usize> {
        let mut ids = vec![0; self.len()];
        for (c, cycle) in self.cycles().iter().enumerate() {
            for &x in cycle {
                ids[x] = c;
            }
        }
        ids
    }
}
