//! Partition entropy, joins, entropy-rate estimates, and horseshoe lower
//! bounds. Logarithms are natural.

mod horseshoe;

pub use horseshoe::{horseshoe_entropy_lower, markov_components, Rect, RectBranch, RectModel};

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::maps::MeasureMap;
use crate::metrics::delta_sum;
use crate::perm::CellPermutation;
use crate::refined::RefinedSet;

/// A finite partition of the cube, stored as one label per fine cell of a
/// refined grid. Labels are `0..parts` and every label is used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    base: DyadicGrid,
    refine: u32,
    labels: Vec<u32>,
    parts: usize,
}

/// Relabels by order of first appearance.
fn canonical(labels: &mut [u32]) -> usize {
    let mut map: HashMap<u32, u32> = HashMap::new();
    for l in labels.iter_mut() {
        let next = map.len() as u32;
        *l = *map.entry(*l).or_insert(next);
    }
    map.len()
}

impl Partition {
    pub fn from_labels(base: &DyadicGrid, refine: u32, mut labels: Vec<u32>) -> Result<Self> {
        let fine = base.refined(refine)?;
        if labels.len() != fine.cell_count() {
            return Err(Error::NotAPartition(format!("{} labels for {} fine cells", labels.len(), fine.cell_count())));
        }
        let parts = canonical(&mut labels);
        Ok(Partition { base: *base, refine, labels, parts })
    }

    /// Checks that the sets are pairwise disjoint and cover the cube.
    pub fn from_parts(parts: &[RefinedSet]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::NotAPartition("no parts".into()))?;
        for p in parts {
            first.same_grid(p)?;
        }
        let fine_order = first.fine_order();
        let base = DyadicGrid::new(first.dim(), fine_order, crate::grid::Topology::Cube)?;
        let mut labels = vec![u32::MAX; first.universe()];
        for (k, p) in parts.iter().enumerate() {
            for f in p.iter() {
                if labels[f] != u32::MAX {
                    return Err(Error::NotAPartition(format!("fine cell {f} lies in two parts")));
                }
                labels[f] = k as u32;
            }
        }
        if labels.contains(&u32::MAX) {
            return Err(Error::NotAPartition("parts do not cover the cube".into()));
        }
        Partition::from_labels(&base, 0, labels)
    }

    /// The partition into the cells of `grid`, on a refinement of it.
    pub fn cells(grid: &DyadicGrid, refine: u32) -> Result<Self> {
        let fine = grid.refined(refine)?;
        let labels = (0..fine.cell_count()).map(|f| grid.locate(&fine.center(f)) as u32).collect();
        Partition::from_labels(grid, refine, labels)
    }

    /// Labels fine cells by a function of their midpoints.
    pub fn from_fn(base: &DyadicGrid, refine: u32, label: impl Fn(&[f64]) -> u32) -> Result<Self> {
        let fine = base.refined(refine)?;
        let labels = (0..fine.cell_count()).map(|f| label(&fine.center(f))).collect();
        Partition::from_labels(base, refine, labels)
    }

    pub fn fine_grid(&self) -> DyadicGrid {
        self.base.refined(self.refine).expect("checked at construction")
    }

    pub fn part_count(&self) -> usize {
        self.parts
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_of(&self, point: &[f64]) -> u32 {
        self.labels[self.fine_grid().locate(point)]
    }

    pub fn part_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.parts];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    pub fn measures(&self) -> Vec<f64> {
        let n = self.labels.len() as f64;
        self.part_sizes().into_iter().map(|s| s as f64 / n).collect()
    }

    pub fn parts(&self) -> Result<Vec<RefinedSet>> {
        let mut out = vec![RefinedSet::empty(&self.base, self.refine)?; self.parts];
        for (f, &l) in self.labels.iter().enumerate() {
            out[l as usize].insert(f);
        }
        Ok(out)
    }

    fn same_grid(&self, other: &Partition) -> Result<()> {
        let (a, b) = (self.fine_grid(), other.fine_grid());
        if a.dim() != b.dim() || a.order() != b.order() {
            return Err(Error::GridMismatch(format!(
                "partitions on fine orders {} and {}",
                a.order(),
                b.order()
            )));
        }
        Ok(())
    }
}

/// `-Σ μ(A) log μ(A)` from part sizes.
fn entropy_of_counts(sizes: impl IntoIterator<Item = usize>, total: usize) -> f64 {
    let n = total as f64;
    sizes
        .into_iter()
        .filter(|&s| s > 0)
        .map(|s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn partition_entropy(p: &Partition) -> f64 {
    entropy_of_counts(p.part_sizes(), p.labels.len())
}

/// All nonempty intersections `A ∩ B`.
pub fn join(p: &Partition, q: &Partition) -> Result<Partition> {
    p.same_grid(q)?;
    let width = q.parts as u64;
    let mut map: HashMap<u64, u32> = HashMap::new();
    let labels = p
        .labels
        .iter()
        .zip(&q.labels)
        .map(|(&a, &b)| {
            let key = a as u64 * width + b as u64;
            let next = map.len() as u32;
            *map.entry(key).or_insert(next)
        })
        .collect();
    Partition::from_labels(&p.base, p.refine, labels)
}

fn itinerary_entropy(map: &MeasureMap, p: &Partition, l: usize) -> f64 {
    let fine = p.fine_grid();
    let words: Vec<Vec<u32>> = (0..fine.cell_count())
        .into_par_iter()
        .map(|f| {
            let mut x = fine.center(f);
            let mut word = Vec::with_capacity(l);
            for j in 0..l {
                if j > 0 {
                    x = map.eval_unchecked(&x);
                }
                word.push(p.labels[fine.locate(&x)]);
            }
            word
        })
        .collect();
    let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
    for w in words {
        *counts.entry(w).or_insert(0) += 1;
    }
    let mut sizes: Vec<usize> = counts.into_values().collect();
    // fixed summation order
    sizes.sort_unstable();
    entropy_of_counts(sizes, fine.cell_count())
}

/// The dynamics whose entropy is estimated.
#[derive(Debug, Clone, Copy)]
pub enum Dynamics<'a> {
    Map(&'a MeasureMap),
    /// A cell permutation acting by translation of the cells of the grid.
    Permutation(&'a CellPermutation, &'a DyadicGrid),
}

/// `H(P ∨ f^-1 P ∨ ... ∨ f^-(l-1) P)`, counting itineraries of fine-cell
/// midpoints.
pub fn join_entropy(dynamics: Dynamics<'_>, p: &Partition, l: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidArgument("itinerary length must be at least 1".into()));
    }
    match dynamics {
        Dynamics::Map(map) => Ok(itinerary_entropy(map, p, l)),
        Dynamics::Permutation(perm, grid) => {
            if perm.len() != grid.cell_count() {
                return Err(Error::GridMismatch("permutation size differs from the grid".into()));
            }
            let map = MeasureMap::Dyadic { grid: *grid, perm: perm.clone() };
            Ok(itinerary_entropy(&map, p, l))
        }
    }
}

/// [`join_entropy`] divided by `l`.
pub fn entropy_rate_estimate(dynamics: Dynamics<'_>, p: &Partition, l: usize) -> Result<f64> {
    Ok(join_entropy(dynamics, p, l)? / l as f64)
}

/// `H_l - H_(l-1)`, the conditional entropy of the newest symbol given the
/// previous ones. Its bias decays faster in `l` than that of `H_l / l`.
pub fn entropy_increment_estimate(dynamics: Dynamics<'_>, p: &Partition, l: usize) -> Result<f64> {
    if l < 2 {
        return Err(Error::InvalidArgument("increment needs l >= 2".into()));
    }
    Ok(join_entropy(dynamics, p, l)? - join_entropy(dynamics, p, l - 1)?)
}

/// `-x log(x / q^l)` with `x = l μ`, and `0` at `x = 0`.
pub fn gap_bound(l: usize, mu: f64, q: usize) -> f64 {
    let x = l as f64 * mu;
    if x <= 0.0 {
        return 0.0;
    }
    -x * (x.ln() - l as f64 * (q as f64).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyGap {
    pub l: usize,
    /// Join entropy of the cell partition under the map.
    pub map_entropy: f64,
    /// Join entropy of the cell partition under the permutation, `log q`.
    pub perm_entropy: f64,
    pub delta_sum: f64,
    pub bound: f64,
}

/// Compares the `l`-fold join entropies of the cell partition under a map
/// and under its cell permutation with the bound `-l μ log(l μ / q^l)`.
pub fn entropy_gap(map: &MeasureMap, perm: &CellPermutation, grid: &DyadicGrid, l: usize, refine: u32) -> Result<EntropyGap> {
    let p = Partition::cells(grid, refine)?;
    let mu = delta_sum(map, perm, grid, refine)?;
    Ok(EntropyGap {
        l,
        map_entropy: join_entropy(Dynamics::Map(map), &p, l)?,
        perm_entropy: join_entropy(Dynamics::Permutation(perm, grid), &p, l)?,
        delta_sum: mu,
        bound: gap_bound(l, mu, grid.cell_count()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Topology;
    use std::f64::consts::LN_2;

    fn g(n: usize, m: u32) -> DyadicGrid {
        DyadicGrid::new(n, m, Topology::Torus).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let four = Partition::cells(&g(2, 1), 2).unwrap();
        assert!((partition_entropy(&four) - 4f64.ln()).abs() < 1e-12);
        let one = Partition::cells(&g(2, 0), 2).unwrap();
        assert_eq!(partition_entropy(&one), 0.0);
        let uneven = Partition::from_fn(&g(2, 0), 3, |x| if x[0] < 0.5 { 0 } else if x[1] < 0.5 { 1 } else { 2 }).unwrap();
        assert!((partition_entropy(&uneven) - 1.5 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn join_examples() {
        let base = g(2, 0);
        let vertical = Partition::from_fn(&base, 3, |x| (x[0] >= 0.5) as u32).unwrap();
        let horizontal = Partition::from_fn(&base, 3, |x| (x[1] >= 0.5) as u32).unwrap();
        let quad = join(&vertical, &horizontal).unwrap();
        assert_eq!(quad.part_count(), 4);
        assert!((partition_entropy(&quad) - 4f64.ln()).abs() < 1e-12);
        assert_eq!(join(&vertical, &vertical).unwrap(), vertical);
        let trivial = Partition::from_fn(&base, 3, |_| 0).unwrap();
        assert_eq!(join(&vertical, &trivial).unwrap(), vertical);
        let other = Partition::from_fn(&base, 4, |_| 0).unwrap();
        assert_eq!(join(&vertical, &other).unwrap_err().name(), "GridMismatch");
    }

    #[test]
    fn from_parts_validates() {
        let base = g(2, 1);
        let a = RefinedSet::from_cells(&base, 1, [0, 1]).unwrap();
        let b = RefinedSet::from_cells(&base, 1, [2, 3]).unwrap();
        let c = RefinedSet::from_cells(&base, 1, [1, 2, 3]).unwrap();
        assert_eq!(Partition::from_parts(&[a.clone(), b.clone()]).unwrap().part_count(), 2);
        assert_eq!(Partition::from_parts(&[a.clone(), c]).unwrap_err().name(), "NotAPartition");
        assert_eq!(Partition::from_parts(&[a]).unwrap_err().name(), "NotAPartition");
    }

    #[test]
    fn permutation_rate_is_log_q_over_l() {
        let grid = g(2, 2);
        let sigma = CellPermutation::from_cycles(16, &[grid.snake_order().unwrap()]).unwrap();
        let p = Partition::cells(&grid, 2).unwrap();
        for l in 1..6 {
            let h = entropy_rate_estimate(Dynamics::Permutation(&sigma, &grid), &p, l).unwrap();
            assert!((h - 16f64.ln() / l as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_rate() {
        let p = Partition::from_fn(&g(2, 0), 3, |x| if x[0] < 0.25 { 0 } else { 1 }).unwrap();
        let id = MeasureMap::Identity { dim: 2 };
        for l in 1..4 {
            let h = entropy_rate_estimate(Dynamics::Map(&id), &p, l).unwrap();
            assert!((h - partition_entropy(&p) / l as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_bound_shape() {
        assert_eq!(gap_bound(3, 0.0, 4), 0.0);
        let b = gap_bound(2, 0.1, 4);
        assert!((b - (-0.2 * (0.2f64.ln() - 2.0 * 4f64.ln()))).abs() < 1e-15);
    }

    fn cat() -> MeasureMap {
        MeasureMap::parse("torus_linear:2,1,1,1", 2).unwrap()
    }

    #[test]
    fn cat_map_rate_regression() {
        let log_lambda = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        let quadrants = Partition::cells(&g(2, 1), 6).unwrap();
        let map = cat();
        let rate = entropy_rate_estimate(Dynamics::Map(&map), &quadrants, 8).unwrap();
        assert!((rate - 1.131_9).abs() < 5e-4, "{rate}");
        // H_l / l ~ h + c / l with c of order log 4
        assert!(rate > log_lambda && rate < log_lambda + 4f64.ln() / 8.0);
        let earlier = entropy_rate_estimate(Dynamics::Map(&map), &quadrants, 4).unwrap();
        assert!(earlier > rate);
    }

    #[test]
    fn cat_map_increment_near_log_lambda() {
        let log_lambda = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        let quadrants = Partition::cells(&g(2, 1), 8).unwrap();
        let map = cat();
        let inc = entropy_increment_estimate(Dynamics::Map(&map), &quadrants, 8).unwrap();
        assert!((inc - log_lambda).abs() < 0.15, "{inc}");
        assert!(entropy_increment_estimate(Dynamics::Map(&map), &quadrants, 1).is_err());
    }
}
