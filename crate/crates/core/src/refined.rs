//! Subsets of the cube stored as bit vectors over a refined dyadic grid.
//!
//! Measures are exact: a set holding `c` fine cells out of `N = 2^(n(m+r))`
//! has measure `c / N`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RefinedSet {
    dim: usize,
    base_order: u32,
    refine: u32,
    len: usize,
    words: Vec<u64>,
}

impl fmt::Debug for RefinedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RefinedSet {{ dim: {}, order: {}+{}, count: {}/{} }}",
            self.dim,
            self.base_order,
            self.refine,
            self.count(),
            self.len
        )
    }
}

impl RefinedSet {
    pub fn empty(base: &DyadicGrid, refine: u32) -> Result<Self> {
        let fine = base.refined(refine)?;
        let len = fine.cell_count();
        Ok(RefinedSet {
            dim: base.dim(),
            base_order: base.order(),
            refine,
            len,
            words: vec![0; len.div_ceil(64)],
        })
    }

    pub fn full(base: &DyadicGrid, refine: u32) -> Result<Self> {
        let mut s = Self::empty(base, refine)?;
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.clear_tail();
        Ok(s)
    }

    /// Union of whole base cells.
    pub fn from_cells(base: &DyadicGrid, refine: u32, cells: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = Self::empty(base, refine)?;
        for c in cells {
            for f in sub_cells(base, c, refine) {
                s.insert(f);
            }
        }
        Ok(s)
    }

    pub fn from_fine_indices(base: &DyadicGrid, refine: u32, fine: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = Self::empty(base, refine)?;
        for f in fine {
            if f >= s.len {
                return Err(Error::InvalidArgument(format!("fine cell {f} out of range")));
            }
            s.insert(f);
        }
        Ok(s)
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base_order(&self) -> u32 {
        self.base_order
    }

    pub fn refine(&self) -> u32 {
        self.refine
    }

    /// Total order `m + r` of the fine grid.
    pub fn fine_order(&self) -> u32 {
        self.base_order + self.refine
    }

    /// Number of fine cells, `2^(n(m+r))`.
    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, fine: usize) {
        self.words[fine / 64] |= 1u64 << (fine % 64);
    }

    pub fn remove(&mut self, fine: usize) {
        self.words[fine / 64] &= !(1u64 << (fine % 64));
    }

    pub fn contains(&self, fine: usize) -> bool {
        fine < self.len && self.words[fine / 64] & (1u64 << (fine % 64)) != 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Exact measure as `(count, universe)`.
    pub fn measure_ratio(&self) -> (u64, u64) {
        (self.count() as u64, self.len as u64)
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 / self.len as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn same_grid(&self, other: &RefinedSet) -> Result<()> {
        if self.dim != other.dim || self.fine_order() != other.fine_order() {
            return Err(Error::GridMismatch(format!(
                "sets on ({}, {}) and ({}, {})",
                self.dim,
                self.fine_order(),
                other.dim,
                other.fine_order()
            )));
        }
        Ok(())
    }

    fn zip_with(&self, other: &RefinedSet, op: impl Fn(u64, u64) -> u64) -> Result<RefinedSet> {
        self.same_grid(other)?;
        let words = self.words.iter().zip(&other.words).map(|(&a, &b)| op(a, b)).collect();
        Ok(RefinedSet { words, ..self.clone() })
    }

    pub fn union(&self, other: &RefinedSet) -> Result<RefinedSet> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &RefinedSet) -> Result<RefinedSet> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn symmetric_difference(&self, other: &RefinedSet) -> Result<RefinedSet> {
        self.zip_with(other, |a, b| a ^ b)
    }

    pub fn difference(&self, other: &RefinedSet) -> Result<RefinedSet> {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> RefinedSet {
        let mut s = self.clone();
        for w in s.words.iter_mut() {
            *w = !*w;
        }
        s.clear_tail();
        s
    }

    pub fn intersection_count(&self, other: &RefinedSet) -> Result<usize> {
        self.same_grid(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    /// `μ(A Δ B)` as a count of fine cells.
    pub fn symmetric_difference_count(&self, other: &RefinedSet) -> Result<usize> {
        self.same_grid(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    pub fn distance(&self, other: &RefinedSet) -> Result<f64> {
        Ok(self.symmetric_difference_count(other)? as f64 / self.len as f64)
    }
}

/// All four set operations at once, as returned by [`set_ops`].
#[derive(Debug, Clone)]
pub struct SetOps {
    pub union: RefinedSet,
    pub intersection: RefinedSet,
    pub symdiff: RefinedSet,
    pub symdiff_measure: (u64, u64),
}

pub fn set_ops(a: &RefinedSet, b: &RefinedSet) -> Result<SetOps> {
    let symdiff = a.symmetric_difference(b)?;
    let symdiff_measure = symdiff.measure_ratio();
    Ok(SetOps {
        union: a.union(b)?,
        intersection: a.intersection(b)?,
        symdiff,
        symdiff_measure,
    })
}

/// Fine-grid indices of the `2^(n r)` sub-cells of a base cell.
pub fn sub_cells(base: &DyadicGrid, cell: usize, refine: u32) -> Vec<usize> {
    let n = base.dim();
    let sub = 1usize << refine;
    let fine_side = base.side() << refine;
    let k = base.multi_index(cell);
    let count = 1usize << (n as u32 * refine);
    let mut out = Vec::with_capacity(count);
    let mut j = vec![0usize; n];
    for _ in 0..count {
        let idx = (0..n).rev().fold(0usize, |acc, axis| acc * fine_side + k[axis] * sub + j[axis]);
        out.push(idx);
        for d in j.iter_mut() {
            *d += 1;
            if *d < sub {
                break;
            }
            *d = 0;
        }
    }
    out
}

/// Midpoints of the sub-cells of a base cell, in the order of [`sub_cells`].
pub fn sub_cell_midpoints(base: &DyadicGrid, cell: usize, refine: u32) -> Vec<Vec<f64>> {
    let fine = base
        .refined(refine)
        .expect("sub-cell midpoints requested beyond the bit budget");
    sub_cells(base, cell, refine).into_iter().map(|f| fine.center(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Topology;

    fn grid() -> DyadicGrid {
        DyadicGrid::new(2, 1, Topology::Cube).unwrap()
    }

    #[test]
    fn symdiff_with_self_is_null() {
        let a = RefinedSet::from_cells(&grid(), 2, [0, 3]).unwrap();
        let ops = set_ops(&a, &a).unwrap();
        assert_eq!(ops.symdiff_measure.0, 0);
        assert_eq!(ops.union, a);
    }

    #[test]
    fn full_versus_empty() {
        let full = RefinedSet::full(&grid(), 3).unwrap();
        let empty = RefinedSet::empty(&grid(), 3).unwrap();
        let ops = set_ops(&full, &empty).unwrap();
        assert_eq!(ops.symdiff_measure, (256, 256));
        assert_eq!(full.measure(), 1.0);
        assert_eq!(full.complement(), empty);
    }

    #[test]
    fn disjoint_halves() {
        let g = grid();
        // cells 0,1 have k_1 = 0 (bottom half); cells 2,3 the top half
        let bottom = RefinedSet::from_cells(&g, 2, [0, 1]).unwrap();
        let top = RefinedSet::from_cells(&g, 2, [2, 3]).unwrap();
        let ops = set_ops(&bottom, &top).unwrap();
        assert_eq!(ops.intersection.count(), 0);
        assert_eq!(ops.union.measure(), 1.0);
        assert_eq!(bottom.measure_ratio(), (32, 64));
    }

    #[test]
    fn mismatch_is_reported() {
        let a = RefinedSet::empty(&grid(), 2).unwrap();
        let b = RefinedSet::empty(&grid(), 3).unwrap();
        assert_eq!(a.union(&b).unwrap_err().name(), "GridMismatch");
        // same fine resolution reached from different base orders is compatible
        let g2 = DyadicGrid::new(2, 2, Topology::Cube).unwrap();
        let c = RefinedSet::empty(&g2, 1).unwrap();
        assert!(a.union(&c).is_ok());
    }

    #[test]
    fn sub_cells_tile_their_parent() {
        let g = DyadicGrid::new(3, 1, Topology::Cube).unwrap();
        let fine = g.refined(2).unwrap();
        let mut seen = vec![0u8; fine.cell_count()];
        for c in 0..g.cell_count() {
            for f in sub_cells(&g, c, 2) {
                seen[f] += 1;
                assert_eq!(fine.locate(&fine.center(f)), f);
                assert_eq!(g.locate(&fine.center(f)), c);
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn capacity_guard() {
        let g = DyadicGrid::with_bit_budget(2, 2, Topology::Cube, 8).unwrap();
        assert_eq!(RefinedSet::empty(&g, 3).unwrap_err().name(), "CapacityExceeded");
    }
}
