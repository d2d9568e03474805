//! Towers over cell permutations: Rokhlin towers, two-column partitions with
//! coprime heights, and the base set of a rank-one approximation.

use std::collections::BTreeMap;

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::maps::MeasureMap;
use crate::perm::CellPermutation;
use crate::refined::{sub_cells, RefinedSet};

/// Writes `k = α p + β q'` with `0 <= α < q'` and `β >= 0`.
pub fn bezout_split(k: usize, p: usize, q2: usize) -> Result<(usize, usize)> {
    if p == 0 || q2 == 0 || p.gcd(&q2) != 1 {
        return Err(Error::NotCoprime(p, q2));
    }
    let bound = p * q2;
    if k < bound {
        return Err(Error::TooSmall { k, bound });
    }
    let (k, p, q2) = (k as i128, p as i128, q2 as i128);
    // p^-1 mod q'
    let inv = p.extended_gcd(&q2).x.rem_euclid(q2);
    let alpha = (k.rem_euclid(q2) * inv).rem_euclid(q2);
    let beta = (k - alpha * p) / q2;
    Ok((alpha as usize, beta as usize))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tower {
    pub base: Vec<usize>,
    pub height: usize,
    pub coverage: f64,
}

impl Tower {
    /// `levels()[j]` is `σ^j(base)`.
    pub fn levels(&self, sigma: &CellPermutation) -> Vec<Vec<usize>> {
        let mut level = self.base.clone();
        let mut out = Vec::with_capacity(self.height);
        for _ in 0..self.height {
            out.push(level.clone());
            level = level.iter().map(|&x| sigma.apply(x)).collect();
        }
        out
    }
}

/// A tower of height `height` whose base takes every `height`-th point of
/// each cycle, starting from the cycle's smallest cell.
pub fn rokhlin_tower(sigma: &CellPermutation, height: usize) -> Result<Tower> {
    if height == 0 {
        return Err(Error::InvalidArgument("tower height must be at least 1".into()));
    }
    let mut base = Vec::new();
    for cycle in sigma.cycles() {
        if cycle.len() < height {
            return Err(Error::CycleTooShort { len: cycle.len(), required: height });
        }
        base.extend((0..cycle.len() / height).map(|j| cycle[j * height]));
    }
    let coverage = (height * base.len()) as f64 / sigma.len().max(1) as f64;
    Ok(Tower { base, height, coverage })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoColumnTower {
    /// Bases of the columns of height `p`.
    pub t1: Vec<usize>,
    /// Bases of the columns of height `q2`.
    pub t2: Vec<usize>,
    pub p: usize,
    pub q2: usize,
}

impl TwoColumnTower {
    /// Every cell of every level, column by column.
    pub fn cells(&self, sigma: &CellPermutation) -> Vec<usize> {
        let mut out = Vec::new();
        for (bases, h) in [(&self.t1, self.p), (&self.t2, self.q2)] {
            for &b in bases {
                let mut x = b;
                for _ in 0..h {
                    out.push(x);
                    x = sigma.apply(x);
                }
            }
        }
        out
    }

    /// True when the levels hit every cell exactly once.
    pub fn is_exact_cover(&self, sigma: &CellPermutation) -> bool {
        let mut seen = vec![false; sigma.len()];
        let cells = self.cells(sigma);
        cells.len() == sigma.len()
            && cells.into_iter().all(|c| !std::mem::replace(&mut seen[c], true))
    }
}

/// Per-cycle `(α, β)` choices with `Σα = Σβ`, smallest shifts first.
fn balance(splits: &[(usize, usize)], p: usize, q2: usize) -> Result<Vec<(usize, usize)>> {
    // reachable Σ(α - β) -> shift choices so far
    let mut states: BTreeMap<i64, Vec<usize>> = BTreeMap::from([(0, Vec::new())]);
    for &(a0, b0) in splits {
        let mut next: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (diff, choice) in &states {
            for t in 0..=b0 / p {
                let (a, b) = ((a0 + t * q2) as i64, (b0 - t * p) as i64);
                let d = diff + a - b;
                next.entry(d).or_insert_with(|| {
                    let mut c = choice.clone();
                    c.push(t);
                    c
                });
            }
        }
        states = next;
    }
    let shifts = states.remove(&0).ok_or(Error::EqualSizeInfeasible)?;
    Ok(splits
        .iter()
        .zip(shifts)
        .map(|(&(a0, b0), t)| (a0 + t * q2, b0 - t * p))
        .collect())
}

/// Partition of the cells into columns of heights `p` and `q2`.
///
/// Along each cycle, from its smallest cell, lay `α` blocks of height `p`
/// then `β` blocks of height `q2`, where `(α, β) = bezout_split(L, p, q2)`.
/// With `equal_size` the per-cycle splits are shifted by multiples of
/// `(q2, -p)` until both bases have the same size.
pub fn two_column_partition(sigma: &CellPermutation, p: usize, q2: usize, equal_size: bool) -> Result<TwoColumnTower> {
    if p == 0 || q2 == 0 || p.gcd(&q2) != 1 {
        return Err(Error::NotCoprime(p, q2));
    }
    let cycles = sigma.cycles();
    for c in &cycles {
        if c.len() < p * q2 {
            return Err(Error::CycleTooShort { len: c.len(), required: p * q2 });
        }
    }
    let mut splits = cycles
        .iter()
        .map(|c| bezout_split(c.len(), p, q2))
        .collect::<Result<Vec<_>>>()?;
    if equal_size {
        splits = balance(&splits, p, q2)?;
    }
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    for (cycle, &(alpha, beta)) in cycles.iter().zip(&splits) {
        t1.extend((0..alpha).map(|j| cycle[j * p]));
        t2.extend((0..beta).map(|j| cycle[alpha * p + j * q2]));
    }
    Ok(TwoColumnTower { t1, t2, p, q2 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankOneCertificate {
    pub start_cell: usize,
    #[serde(skip)]
    pub base: RefinedSet,
    /// `μ(A)` as `(count, universe)` fine cells.
    pub base_measure: (u64, u64),
    pub height: usize,
    pub disjointness_ok: bool,
    /// `q μ(A ∩ f^q A)`.
    pub return_overlap: f64,
    /// `μ(P_i Δ P_i')` for every cell `P_i`, where `P_i'` is the tower level
    /// that the permutation places in `P_i`.
    pub partition_error: Vec<f64>,
    /// `μ(C) - μ(A)`.
    pub deficit: f64,
}

fn push(map: &MeasureMap, fine: &DyadicGrid, set: &[usize], times: usize) -> Vec<usize> {
    set.par_iter()
        .map(|&f| {
            let mut x = fine.center(f);
            for _ in 0..times {
                x = map.eval_unchecked(&x);
            }
            fine.locate(&x)
        })
        .collect()
}

/// Base set `A = ∩_{i<q} f^-i(f_m^i(C))` of the tower generated by a
/// starting cell `C`, evaluated on sub-cell midpoints at refinement `refine`.
pub fn rank_one_base_from(
    map: &MeasureMap,
    fm: &CellPermutation,
    grid: &DyadicGrid,
    refine: u32,
    start: usize,
) -> Result<RankOneCertificate> {
    let q = grid.cell_count();
    if fm.len() != q {
        return Err(Error::GridMismatch(format!("permutation of {} cells on a grid of {q}", fm.len())));
    }
    if !fm.is_cyclic() {
        return Err(Error::NotCyclic { cycles: fm.cycle_count() });
    }
    if start >= q {
        return Err(Error::InvalidArgument(format!("start cell {start} out of range")));
    }
    let fine = grid.refined(refine)?;
    let orbit: Vec<usize> = std::iter::successors(Some(start), |&c| Some(fm.apply(c))).take(q).collect();
    let members: Vec<usize> = sub_cells(grid, start, refine)
        .into_par_iter()
        .filter(|&f| {
            let mut x = fine.center(f);
            for (i, &cell) in orbit.iter().enumerate() {
                if i > 0 {
                    x = map.eval_unchecked(&x);
                }
                if grid.locate(&x) != cell {
                    return false;
                }
            }
            true
        })
        .collect();
    let base = RefinedSet::from_fine_indices(grid, refine, members.iter().copied())?;
    let universe = fine.cell_count();

    let mut union = RefinedSet::empty(grid, refine)?;
    let mut total = 0usize;
    let mut level = members.clone();
    let mut levels = Vec::with_capacity(q);
    for i in 0..q {
        if i > 0 {
            level = push(map, &fine, &level, 1);
        }
        let set = RefinedSet::from_fine_indices(grid, refine, level.iter().copied())?;
        total += set.count();
        union = union.union(&set)?;
        levels.push(set);
    }
    let disjointness_ok = union.count() == total;
    let returned = RefinedSet::from_fine_indices(grid, refine, push(map, &fine, &level, 1))?;
    let return_overlap = q as f64 * base.intersection_count(&returned)? as f64 / universe as f64;

    let mut partition_error = vec![0.0; q];
    for (j, &cell) in orbit.iter().enumerate() {
        let part = RefinedSet::from_cells(grid, refine, [cell])?;
        partition_error[cell] = part.distance(&levels[j])?;
    }
    let (count, uni) = base.measure_ratio();
    Ok(RankOneCertificate {
        start_cell: start,
        base_measure: (count, uni),
        height: q,
        disjointness_ok,
        return_overlap,
        partition_error,
        deficit: 1.0 / q as f64 - count as f64 / uni as f64,
        base,
    })
}

/// [`rank_one_base_from`] starting at cell 0.
pub fn rank_one_base(map: &MeasureMap, fm: &CellPermutation, grid: &DyadicGrid, refine: u32) -> Result<RankOneCertificate> {
    rank_one_base_from(map, fm, grid, refine, 0)
}

/// `μ(A)` for every possible starting cell, to see whether the choice of
/// cell 0 matters.
pub fn base_measure_by_start(map: &MeasureMap, fm: &CellPermutation, grid: &DyadicGrid, refine: u32) -> Result<Vec<f64>> {
    (0..grid.cell_count())
        .map(|c| {
            let cert = rank_one_base_from(map, fm, grid, refine, c)?;
            Ok(cert.base_measure.0 as f64 / cert.base_measure.1 as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Topology;

    #[test]
    fn bezout_examples() {
        assert_eq!(bezout_split(15, 3, 5).unwrap(), (0, 3));
        assert_eq!(bezout_split(16, 3, 5).unwrap(), (2, 2));
        assert_eq!(bezout_split(17, 3, 5).unwrap(), (4, 1));
        assert_eq!(bezout_split(20, 2, 4).unwrap_err(), Error::NotCoprime(2, 4));
        assert_eq!(bezout_split(14, 3, 5).unwrap_err(), Error::TooSmall { k: 14, bound: 15 });
        assert_eq!(bezout_split(7, 1, 1).unwrap(), (0, 7));
    }

    #[test]
    fn rokhlin_examples() {
        let c10 = CellPermutation::from_cycles(10, &[(0..10).collect()]).unwrap();
        let t = rokhlin_tower(&c10, 3).unwrap();
        assert_eq!(t.base.len(), 3);
        assert!((t.coverage - 0.9).abs() < 1e-15);
        let c4 = CellPermutation::from_cycles(4, &[(0..4).collect()]).unwrap();
        assert_eq!(rokhlin_tower(&c4, 4).unwrap().coverage, 1.0);
        let two = CellPermutation::from_cycles(12, &[(0..5).collect(), (5..12).collect()]).unwrap();
        assert_eq!(rokhlin_tower(&two, 3).unwrap().coverage, 0.75);
        assert_eq!(rokhlin_tower(&two, 6).unwrap_err(), Error::CycleTooShort { len: 5, required: 6 });
    }

    #[test]
    fn two_column_examples() {
        let c15 = CellPermutation::from_cycles(15, &[(0..15).collect()]).unwrap();
        let t = two_column_partition(&c15, 3, 5, false).unwrap();
        assert!(t.t1.is_empty() && t.t2.len() == 3 && t.is_exact_cover(&c15));
        let c16 = CellPermutation::from_cycles(16, &[(0..16).collect()]).unwrap();
        let t = two_column_partition(&c16, 3, 5, false).unwrap();
        assert_eq!((t.t1.len(), t.t2.len()), (2, 2));
        assert!(t.is_exact_cover(&c16));
        let c2 = CellPermutation::new(vec![1, 0]).unwrap();
        let t = two_column_partition(&c2, 1, 2, false).unwrap();
        assert_eq!((t.t1.len(), t.t2.len()), (0, 1));
        assert_eq!(two_column_partition(&c16, 2, 4, false).unwrap_err(), Error::NotCoprime(2, 4));
    }

    #[test]
    fn equal_size_columns() {
        // 30 splits as (0, 10) for heights (2, 3); shifting twice gives (6, 6)
        let c = CellPermutation::from_cycles(30, &[(0..30).collect()]).unwrap();
        let t = two_column_partition(&c, 2, 3, true).unwrap();
        assert_eq!((t.t1.len(), t.t2.len()), (6, 6));
        assert!(t.is_exact_cover(&c));
        let c31 = CellPermutation::from_cycles(31, &[(0..31).collect()]).unwrap();
        assert_eq!(two_column_partition(&c31, 2, 3, true).unwrap_err(), Error::EqualSizeInfeasible);
    }

    #[test]
    fn rank_one_on_cell_translation() {
        let g = DyadicGrid::new(2, 2, Topology::Torus).unwrap();
        let fm = CellPermutation::from_cycles(16, &[g.snake_order().unwrap()]).unwrap();
        let f = MeasureMap::Dyadic { grid: g, perm: fm.clone() };
        let cert = rank_one_base(&f, &fm, &g, 3).unwrap();
        assert_eq!(cert.base_measure, (64, 1024));
        assert_eq!(cert.deficit, 0.0);
        assert!(cert.disjointness_ok);
        assert_eq!(cert.return_overlap, 1.0);
        assert!(cert.partition_error.iter().all(|&e| e == 0.0));
        assert!(base_measure_by_start(&f, &fm, &g, 2).unwrap().iter().all(|&m| m == 1.0 / 16.0));
    }

    #[test]
    fn rank_one_needs_a_cycle() {
        let g = DyadicGrid::new(2, 1, Topology::Torus).unwrap();
        let id = CellPermutation::identity(4);
        let f = MeasureMap::Identity { dim: 2 };
        assert_eq!(rank_one_base(&f, &id, &g, 2).unwrap_err().name(), "NotCyclic");
    }
}
