//! Estimation of the overlap matrix `w_ij ≈ μ(f(C_i) ∩ C_j)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MeasureMap;
use crate::error::{Error, Result};
use crate::grid::DyadicGrid;

/// How cell overlaps are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Closed form; only for maps that translate cells onto cells.
    Exact,
    /// `s^n` midpoints of an `s`-fold subdivision of every cell.
    Stratified(usize),
}

/// Sparse overlap counts. Row `i` lists `(j, c)` with `c > 0` samples of
/// cell `i` landing in cell `j`; the weight is `c / (q S)` where `S` is the
/// number of samples per cell, so every row sums to exactly `1/q`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    q: usize,
    samples_per_cell: u64,
    rows: Vec<Vec<(usize, u64)>>,
    /// Sampled diameter of each cell's image, when known.
    image_diameters: Option<Vec<f64>>,
}

impl OverlapMatrix {
    /// Builds a matrix from raw nonnegative integer counts. Zero entries are
    /// dropped; rows need not share a sum.
    pub fn from_counts(counts: &[Vec<u64>]) -> Result<Self> {
        let q = counts.len();
        if counts.iter().any(|r| r.len() != q) {
            return Err(Error::InvalidArgument("overlap matrix must be square".into()));
        }
        let samples_per_cell = counts.iter().map(|r| r.iter().sum::<u64>()).max().unwrap_or(1).max(1);
        let rows = counts
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &c)| c > 0).map(|(j, &c)| (j, c)).collect())
            .collect();
        Ok(OverlapMatrix { q, samples_per_cell, rows, image_diameters: None })
    }

    pub fn size(&self) -> usize {
        self.q
    }

    pub fn samples_per_cell(&self) -> u64 {
        self.samples_per_cell
    }

    /// Positive entries of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, u64)] {
        &self.rows[i]
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0)
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.count(i, j) as f64 / (self.q as f64 * self.samples_per_cell as f64)
    }

    pub fn image_diameters(&self) -> Option<&[f64]> {
        self.image_diameters.as_deref()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.q)
            .map(|i| self.rows[i].iter().map(|&(_, c)| c).sum::<u64>() as f64 / (self.q as f64 * self.samples_per_cell as f64))
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut counts = vec![0u64; self.q];
        for row in &self.rows {
            for &(j, c) in row {
                counts[j] += c;
            }
        }
        counts
            .into_iter()
            .map(|c| c as f64 / (self.q as f64 * self.samples_per_cell as f64))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.q).map(|i| (0..self.q).map(|j| self.weight(i, j)).collect()).collect()
    }
}

/// Points `(k + a/(t-1)) / 2^m` of a cell including its corners, used to
/// estimate image diameters.
fn lattice(grid: &DyadicGrid, cell: usize, t: usize) -> Vec<Vec<f64>> {
    let n = grid.dim();
    let h = grid.side_length();
    let k = grid.multi_index(cell);
    let total = t.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    let mut a = vec![0usize; n];
    for _ in 0..total {
        out.push(
            (0..n)
                .map(|i| {
                    let frac = if t == 1 { 0.5 } else { a[i] as f64 / (t - 1) as f64 };
                    (k[i] as f64 + frac) * h
                })
                .collect(),
        );
        for d in a.iter_mut() {
            *d += 1;
            if *d < t {
                break;
            }
            *d = 0;
        }
    }
    out
}

/// Midpoints of the `s^n` sub-cells of an `s`-fold subdivision of a cell.
pub(crate) fn stratified_points(grid: &DyadicGrid, cell: usize, s: usize) -> Vec<Vec<f64>> {
    let n = grid.dim();
    let h = grid.side_length();
    let k = grid.multi_index(cell);
    let total = s.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    let mut a = vec![0usize; n];
    for _ in 0..total {
        out.push((0..n).map(|i| (k[i] as f64 + (a[i] as f64 + 0.5) / s as f64) * h).collect());
        for d in a.iter_mut() {
            *d += 1;
            if *d < s {
                break;
            }
            *d = 0;
        }
    }
    out
}

/// Largest number of points per axis used for image diameters.
const DIAMETER_LATTICE: usize = 17;

fn diameter(grid: &DyadicGrid, pts: &[Vec<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for (a, p) in pts.iter().enumerate() {
        for r in &pts[a + 1..] {
            best = best.max(grid.distance(p, r));
        }
    }
    best
}

/// Estimates `μ(f(C_i) ∩ C_j)` on `grid`.
///
/// Stratified sampling pushes `s^n` sub-cell midpoints of every cell and
/// counts where they land. Image diameters are measured on a lattice of at
/// most `17^n` points per cell that includes the cell corners. Exact mode
/// requires a map that translates cells onto cells.
pub fn overlap_matrix(map: &MeasureMap, grid: &DyadicGrid, sampling: Sampling) -> Result<OverlapMatrix> {
    if map.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!("map of dimension {} on a {}-dimensional grid", map.dim(), grid.dim())));
    }
    let q = grid.cell_count();
    match sampling {
        Sampling::Exact => {
            let perm = map.cell_permutation(grid).ok_or(Error::NotExact)?;
            Ok(OverlapMatrix {
                q,
                samples_per_cell: 1,
                rows: (0..q).map(|i| vec![(perm.apply(i), 1)]).collect(),
                image_diameters: Some(vec![grid.cell_diameter(); q]),
            })
        }
        Sampling::Stratified(s) => {
            if s == 0 {
                return Err(Error::InvalidArgument("sampling density must be at least 1".into()));
            }
            let n = grid.dim() as u32;
            let samples = (s as u64).checked_pow(n).filter(|&v| v <= 1 << 24).ok_or_else(|| {
                Error::InvalidArgument(format!("{s}^{n} samples per cell is too many"))
            })?;
            let t = (s + 1).min(DIAMETER_LATTICE);
            let per_cell: Vec<(Vec<(usize, u64)>, f64)> = (0..q)
                .into_par_iter()
                .map(|i| {
                    let mut hits: Vec<usize> = stratified_points(grid, i, s)
                        .iter()
                        .map(|p| grid.locate(&map.eval_unchecked(p)))
                        .collect();
                    hits.sort_unstable();
                    let mut row: Vec<(usize, u64)> = Vec::new();
                    for j in hits {
                        match row.last_mut() {
                            Some((c, n)) if *c == j => *n += 1,
                            _ => row.push((j, 1)),
                        }
                    }
                    let images: Vec<Vec<f64>> = lattice(grid, i, t).iter().map(|p| map.eval_unchecked(p)).collect();
                    (row, diameter(grid, &images))
                })
                .collect();
            let (rows, diams) = per_cell.into_iter().unzip();
            Ok(OverlapMatrix { q, samples_per_cell: samples, rows, image_diameters: Some(diams) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Topology;

    #[test]
    fn identity_is_diagonal() {
        let g = DyadicGrid::new(2, 2, Topology::Cube).unwrap();
        let id = MeasureMap::Identity { dim: 2 };
        for sampling in [Sampling::Exact, Sampling::Stratified(4)] {
            let w = overlap_matrix(&id, &g, sampling).unwrap();
            for i in 0..16 {
                assert_eq!(w.row(i).len(), 1);
                assert_eq!(w.weight(i, i), 1.0 / 16.0);
            }
        }
    }

    #[test]
    fn half_shift_is_a_permutation_matrix() {
        let g = DyadicGrid::new(2, 1, Topology::Torus).unwrap();
        let t = MeasureMap::parse("translation:0.5,0", 2).unwrap();
        let exact = overlap_matrix(&t, &g, Sampling::Exact).unwrap();
        let sampled = overlap_matrix(&t, &g, Sampling::Stratified(8)).unwrap();
        for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            assert_eq!(exact.weight(i, j), 0.25);
            assert_eq!(sampled.weight(i, j), 0.25);
        }
    }

    #[test]
    fn exact_mode_requires_cell_translations() {
        let g = DyadicGrid::new(2, 2, Topology::Torus).unwrap();
        let cat = MeasureMap::parse("torus_linear:2,1,1,1", 2).unwrap();
        assert_eq!(overlap_matrix(&cat, &g, Sampling::Exact).unwrap_err(), Error::NotExact);
    }

    #[test]
    fn cat_map_rows_exact_columns_close() {
        let g = DyadicGrid::new(2, 1, Topology::Torus).unwrap();
        let cat = MeasureMap::parse("torus_linear:2,1,1,1", 2).unwrap();
        let w = overlap_matrix(&cat, &g, Sampling::Stratified(16)).unwrap();
        assert!(w.row_sums().iter().all(|&r| r == 0.25));
        for c in w.column_sums() {
            assert!((c - 0.25).abs() <= 1.0 / (4.0 * 256.0), "column sum {c}");
        }
    }

    #[test]
    fn column_error_shrinks_with_density() {
        let g = DyadicGrid::new(2, 2, Topology::Torus).unwrap();
        let cat = MeasureMap::parse("torus_linear:2,1,1,1", 2).unwrap();
        let err = |s| {
            let w = overlap_matrix(&cat, &g, Sampling::Stratified(s)).unwrap();
            w.column_sums().iter().map(|c| (c - 1.0 / 16.0).abs()).fold(0.0, f64::max)
        };
        let (e4, e8, e16) = (err(4), err(8), err(16));
        assert!(e8 <= e4 && e16 <= e8, "{e4} {e8} {e16}");
    }

    #[test]
    fn from_counts_drops_zeros() {
        let w = OverlapMatrix::from_counts(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(w.row(0), &[(0, 1)]);
        assert!(OverlapMatrix::from_counts(&[vec![1, 0]]).is_err());
    }
}
