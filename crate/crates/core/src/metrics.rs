//! Distances between cell permutations and maps, and the approximation-speed
//! functional `Σ_i μ(f(C_i) Δ f_k(C_i))`.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::lax::{lax_approximate, LaxCertificate, LaxMode};
use crate::maps::{MeasureMap, Sampling};
use crate::perm::CellPermutation;

fn check_sizes(grid: &DyadicGrid, perms: &[&CellPermutation]) -> Result<()> {
    let q = grid.cell_count();
    for p in perms {
        if p.len() != q {
            return Err(Error::GridMismatch(format!("permutation of {} cells on a grid of {q}", p.len())));
        }
    }
    Ok(())
}

/// `max_i |center(a(i)) - center(b(i))|`, the center part of
/// [`d_strong_bound`].
pub fn center_sup_distance(a: &CellPermutation, b: &CellPermutation, grid: &DyadicGrid) -> Result<f64> {
    check_sizes(grid, &[a, b])?;
    Ok((0..grid.cell_count())
        .map(|i| grid.center_distance(a.apply(i), b.apply(i)))
        .fold(0.0, f64::max))
}

/// Upper bound on the sup distance between the cell translations `a` and
/// `b`: the largest center distance of image cells plus one cell diameter.
pub fn d_strong_bound(a: &CellPermutation, b: &CellPermutation, grid: &DyadicGrid) -> Result<f64> {
    Ok(center_sup_distance(a, b, grid)? + grid.cell_diameter())
}

/// `inf { α : μ{ cells with distance > α } < α }` for per-cell distances on
/// cells of measure `1/q`.
pub fn weak_distance_from(distances: &[f64]) -> f64 {
    let q = distances.len();
    if q == 0 {
        return 0.0;
    }
    let mut d = distances.to_vec();
    d.sort_by(|a, b| b.total_cmp(a));
    let qf = q as f64;
    let mut best = f64::INFINITY;
    for k in 0..=q {
        // α in [d_(k+1), d_(k)) leaves exactly the k largest above α
        let upper = if k == 0 { f64::INFINITY } else { d[k - 1] };
        let lower = if k == q { 0.0 } else { d[k] };
        let candidate = lower.max(k as f64 / qf);
        if candidate < upper {
            best = best.min(candidate);
        }
    }
    best
}

/// Weak distance between two cell translations at cell resolution.
pub fn d_weak(a: &CellPermutation, b: &CellPermutation, grid: &DyadicGrid) -> Result<f64> {
    check_sizes(grid, &[a, b])?;
    let d: Vec<f64> = (0..grid.cell_count())
        .map(|i| grid.center_distance(a.apply(i), b.apply(i)))
        .collect();
    Ok(weak_distance_from(&d))
}

/// Points per axis of the lattice used for pointwise displacement.
const DISPLACEMENT_LATTICE: usize = 5;

/// Per cell, the largest sampled distance between `f(x)` and the cell
/// translation of `x` by `perm`, over a lattice including the corners.
pub fn cell_displacements(map: &MeasureMap, perm: &CellPermutation, grid: &DyadicGrid) -> Result<Vec<f64>> {
    check_sizes(grid, &[perm])?;
    let t = DISPLACEMENT_LATTICE;
    let n = grid.dim();
    let h = grid.side_length();
    Ok((0..grid.cell_count())
        .into_par_iter()
        .map(|i| {
            let k = grid.multi_index(i);
            let target = grid.multi_index(perm.apply(i));
            let mut a = vec![0usize; n];
            let mut best: f64 = 0.0;
            for _ in 0..t.pow(n as u32) {
                let frac: Vec<f64> = a.iter().map(|&ai| ai as f64 / (t - 1) as f64).collect();
                let x: Vec<f64> = (0..n).map(|j| (k[j] as f64 + frac[j]) * h).collect();
                let y: Vec<f64> = (0..n).map(|j| (target[j] as f64 + frac[j]) * h).collect();
                best = best.max(grid.distance(&map.eval_unchecked(&x), &y));
                for d in a.iter_mut() {
                    *d += 1;
                    if *d < t {
                        break;
                    }
                    *d = 0;
                }
            }
            best
        })
        .collect())
}

/// Declared error `q n 2^-r` of the midpoint-transport estimator.
pub fn refinement_tolerance(grid: &DyadicGrid, refine: u32) -> f64 {
    grid.cell_count() as f64 * grid.dim() as f64 * f64::powi(2.0, -(refine as i32))
}

fn push_symdiff(
    grid: &DyadicGrid,
    refine: u32,
    p: usize,
    map: &MeasureMap,
    perm: &CellPermutation,
) -> Result<f64> {
    if refine < 1 {
        return Err(Error::InvalidArgument("refinement must be at least 1".into()));
    }
    check_sizes(grid, &[perm])?;
    let fine = grid.refined(refine)?;
    let sub = 1usize << (grid.dim() as u32 * refine);
    let universe = fine.cell_count() as f64;
    let target = perm.pow(p as u64);
    let terms: Vec<usize> = (0..grid.cell_count())
        .into_par_iter()
        .map(|i| {
            let mut landed: Vec<usize> = crate::refined::sub_cells(grid, i, refine)
                .into_iter()
                .map(|f| {
                    let mut x = fine.center(f);
                    for _ in 0..p {
                        x = map.eval_unchecked(&x);
                    }
                    fine.locate(&x)
                })
                .collect();
            landed.sort_unstable();
            landed.dedup();
            let goal = target.apply(i);
            let inside = landed
                .iter()
                .filter(|&&f| grid.locate(&fine.center(f)) == goal)
                .count();
            landed.len() + sub - 2 * inside
        })
        .collect();
    Ok(terms.iter().map(|&t| t as f64 / universe).sum())
}

/// `Σ_i μ(f(C_i) Δ f_k(C_i))`, with `f(C_i)` estimated by pushing the
/// midpoints of the `2^(n r)` sub-cells of `C_i`.
pub fn delta_sum(map: &MeasureMap, perm: &CellPermutation, grid: &DyadicGrid, refine: u32) -> Result<f64> {
    push_symdiff(grid, refine, 1, map, perm)
}

/// `Σ_i μ(f^p(C_i) Δ f_k^p(C_i))` with the same estimator.
pub fn delta_sum_iterate(map: &MeasureMap, perm: &CellPermutation, p: usize, grid: &DyadicGrid, refine: u32) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidArgument("iterate count must be at least 1".into()));
    }
    push_symdiff(grid, refine, p, map, perm)
}

/// Target speed `ϑ(q)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SpeedSpec {
    InvQ { c: f64 },
    /// `c / (q log² q)`; infinite at `q = 1`.
    InvQLog2 { c: f64 },
    InvQ2 { c: f64 },
    /// Step function: the value of the last entry whose `q` does not exceed
    /// the argument, or the first value below every entry.
    Table { points: Vec<(u64, f64)> },
}

impl SpeedSpec {
    pub fn eval(&self, q: u64) -> f64 {
        let qf = q as f64;
        match self {
            SpeedSpec::InvQ { c } => c / qf,
            SpeedSpec::InvQLog2 { c } => {
                let l = qf.ln();
                if l == 0.0 {
                    f64::INFINITY
                } else {
                    c / (qf * l * l)
                }
            }
            SpeedSpec::InvQ2 { c } => c / (qf * qf),
            SpeedSpec::Table { points } => points
                .iter()
                .rev()
                .find(|(k, _)| *k <= q)
                .or(points.first())
                .map_or(f64::INFINITY, |&(_, v)| v),
        }
    }
}

impl FromStr for SpeedSpec {
    type Err = Error;

    /// `inv_q`, `inv_q:0.5`, `inv_q_log2`, `inv_q2`, `table:4=0.5,16=0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.trim().split_once(':') {
            Some((a, b)) => (a.trim(), Some(b.trim())),
            None => (s.trim(), None),
        };
        let bad = |what: &str| Error::ConfigError(format!("bad speed `{s}`: {what}"));
        let constant = || -> Result<f64> {
            match arg {
                None => Ok(1.0),
                Some(a) => a.parse::<f64>().ok().filter(|c| *c > 0.0 && c.is_finite()).ok_or_else(|| bad("constant must be positive")),
            }
        };
        let spec = match name {
            "inv_q" => SpeedSpec::InvQ { c: constant()? },
            "inv_q_log2" => SpeedSpec::InvQLog2 { c: constant()? },
            "inv_q2" => SpeedSpec::InvQ2 { c: constant()? },
            "table" => {
                let mut points = Vec::new();
                for item in arg.ok_or_else(|| bad("empty table"))?.split(',') {
                    let (k, v) = item.split_once('=').ok_or_else(|| bad("entries are q=value"))?;
                    let k: u64 = k.trim().parse().map_err(|_| bad("q must be an integer"))?;
                    let v: f64 = v.trim().parse().map_err(|_| bad("value must be a number"))?;
                    points.push((k, v));
                }
                let increasing = points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 >= w[1].1);
                if !increasing || points.iter().any(|&(_, v)| !(v > 0.0)) {
                    return Err(bad("table must be positive, nonincreasing, with increasing q"));
                }
                SpeedSpec::Table { points }
            }
            _ => return Err(bad("unknown family")),
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxRecord {
    pub order: u32,
    pub q: u64,
    pub mode: LaxMode,
    pub delta_sum: f64,
    /// `q n 2^-r` attached to `delta_sum`.
    pub tolerance: f64,
    pub d_weak: f64,
    pub d_strong_bound: f64,
    pub theta: f64,
    pub pass: bool,
}

/// Lax approximation plus speed bookkeeping at one order.
pub fn approx_record(
    map: &MeasureMap,
    grid: &DyadicGrid,
    mode: LaxMode,
    theta: &SpeedSpec,
    sampling: Sampling,
    refine: u32,
) -> Result<(CellPermutation, ApproxRecord)> {
    let (perm, cert) = lax_approximate(map, grid, sampling, mode)?;
    let record = record_for(map, grid, &perm, &cert, theta, refine)?;
    Ok((perm, record))
}

/// Speed bookkeeping for a permutation already produced by the pipeline.
pub fn record_for(
    map: &MeasureMap,
    grid: &DyadicGrid,
    perm: &CellPermutation,
    cert: &LaxCertificate,
    theta: &SpeedSpec,
    refine: u32,
) -> Result<ApproxRecord> {
    let ds = delta_sum(map, perm, grid, refine)?;
    let q = grid.cell_count() as u64;
    let th = theta.eval(q);
    Ok(ApproxRecord {
        order: grid.order(),
        q,
        mode: cert.mode,
        delta_sum: ds,
        tolerance: refinement_tolerance(grid, refine),
        d_weak: weak_distance_from(&cell_displacements(map, perm, grid)?),
        d_strong_bound: cert.strong_bound,
        theta: th,
        pass: ds <= th,
    })
}

/// One [`ApproxRecord`] per order, grids taking the map's own topology.
pub fn speed_profile(
    map: &MeasureMap,
    orders: &[u32],
    mode: LaxMode,
    theta: &SpeedSpec,
    sampling: Sampling,
    refine: u32,
) -> Result<Vec<ApproxRecord>> {
    if orders.is_empty() || orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("orders must be nonempty and increasing".into()));
    }
    orders
        .iter()
        .map(|&m| {
            let grid = crate::lax::grid_for(map, m)?;
            approx_record(map, &grid, mode, theta, sampling, refine).map(|(_, r)| r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Topology;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cube(n: usize, m: u32) -> DyadicGrid {
        DyadicGrid::new(n, m, Topology::Cube).unwrap()
    }

    #[test]
    fn strong_bound_examples() {
        let g = cube(2, 1);
        let id = CellPermutation::identity(4);
        assert_eq!(d_strong_bound(&id, &id, &g).unwrap(), g.cell_diameter());
        let g1 = cube(1, 1);
        let shift = CellPermutation::new(vec![1, 0]).unwrap();
        assert!((d_strong_bound(&CellPermutation::identity(2), &shift, &g1).unwrap() - 1.0).abs() < 1e-15);
        let swap = CellPermutation::transposition(4, 0, 1);
        let want = 0.5 + 2f64.sqrt() / 2.0;
        assert!((d_strong_bound(&swap, &id, &g).unwrap() - want).abs() < 1e-15);
        assert_eq!(d_strong_bound(&swap, &CellPermutation::identity(2), &g).unwrap_err().name(), "GridMismatch");
    }

    #[test]
    fn weak_distance_examples() {
        assert_eq!(weak_distance_from(&[0.0; 8]), 0.0);
        let mut d = vec![0.0; 16];
        d[5] = 0.7;
        assert_eq!(weak_distance_from(&d), 1.0 / 16.0);
        d[5] = 0.01;
        assert_eq!(weak_distance_from(&d), 0.01);
        let g = cube(2, 2);
        let sigma = CellPermutation::from_cycles(16, &[(0..16).collect()]).unwrap();
        assert_eq!(d_weak(&sigma, &sigma.pow(17), &g).unwrap(), 0.0);
    }

    /// Direct oracle: scan a fine grid of α values.
    fn weak_oracle(d: &[f64]) -> f64 {
        let q = d.len() as f64;
        let mut cands: Vec<f64> = d.to_vec();
        cands.extend((0..=d.len()).map(|k| k as f64 / q));
        cands
            .into_iter()
            .filter_map(|a| {
                // smallest admissible α at or just above each candidate
                let ok = |x: f64| (d.iter().filter(|&&v| v > x).count() as f64 / q) < x;
                if ok(a) {
                    Some(a)
                } else if ok(a + 1e-12) {
                    Some(a)
                } else {
                    None
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn weak_distance_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        use rand::Rng;
        for _ in 0..500 {
            let q = rng.random_range(1..12);
            let d: Vec<f64> = (0..q).map(|_| (rng.random_range(0..6) as f64) / 8.0).collect();
            assert_eq!(weak_distance_from(&d), weak_oracle(&d), "{d:?}");
        }
    }

    #[test]
    fn pseudometric_axioms() {
        let g = cube(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut random = || {
            let mut v: Vec<usize> = (0..16).collect();
            v.shuffle(&mut rng);
            CellPermutation::new(v).unwrap()
        };
        for _ in 0..200 {
            let (a, b, c) = (random(), random(), random());
            for dist in [center_sup_distance, d_weak] {
                let ab = dist(&a, &b, &g).unwrap();
                assert_eq!(ab, dist(&b, &a, &g).unwrap());
                assert_eq!(dist(&a, &a, &g).unwrap(), 0.0);
                assert!(dist(&a, &c, &g).unwrap() <= ab + dist(&b, &c, &g).unwrap() + 1e-15);
            }
        }
    }

    #[test]
    fn rigidity_witness() {
        let g = cube(2, 2);
        let sigma = CellPermutation::from_cycles(16, &[vec![0, 1, 2], vec![3, 4, 5, 6, 7]]).unwrap();
        let d: u64 = sigma.order().try_into().unwrap();
        assert_eq!(d_weak(&sigma.pow(d), &CellPermutation::identity(16), &g).unwrap(), 0.0);
    }

    #[test]
    fn delta_sum_examples() {
        let t = MeasureMap::parse("translation:0.5,0.25", 2).unwrap();
        let g = DyadicGrid::new(2, 2, Topology::Torus).unwrap();
        let perm = t.cell_permutation(&g).unwrap();
        assert_eq!(delta_sum(&t, &perm, &g, 2).unwrap(), 0.0);
        assert_eq!(delta_sum(&t, &perm, &g, 4).unwrap(), 0.0);
        for p in 1..5 {
            assert_eq!(delta_sum_iterate(&t, &perm, p, &g, 2).unwrap(), 0.0);
        }
        let g1 = cube(1, 1);
        let shift = CellPermutation::new(vec![1, 0]).unwrap();
        assert_eq!(delta_sum(&MeasureMap::Identity { dim: 1 }, &shift, &g1, 3).unwrap(), 2.0);
        assert!(delta_sum(&t, &perm, &g, 0).is_err());
    }

    #[test]
    fn cat_map_delta_sum_in_range() {
        let cat = MeasureMap::parse("torus_linear:2,1,1,1", 2).unwrap();
        let g = DyadicGrid::new(2, 3, Topology::Torus).unwrap();
        let (perm, _) = lax_approximate(&cat, &g, Sampling::Stratified(8), LaxMode::Cyclic).unwrap();
        let one = delta_sum(&cat, &perm, &g, 3).unwrap();
        assert!(one > 0.0 && one < 2.0);
        assert_eq!(delta_sum_iterate(&cat, &perm, 1, &g, 3).unwrap(), one);
    }

    #[test]
    fn speed_families() {
        assert_eq!("inv_q".parse::<SpeedSpec>().unwrap().eval(4), 0.25);
        assert_eq!("inv_q2:2".parse::<SpeedSpec>().unwrap().eval(4), 0.125);
        assert_eq!("inv_q_log2".parse::<SpeedSpec>().unwrap().eval(1), f64::INFINITY);
        let t: SpeedSpec = "table:4=0.5,16=0.1".parse().unwrap();
        assert_eq!((t.eval(1), t.eval(4), t.eval(8), t.eval(64)), (0.5, 0.5, 0.5, 0.1));
        assert!("table:4=0.1,16=0.5".parse::<SpeedSpec>().is_err());
        assert!("inv_q:-1".parse::<SpeedSpec>().is_err());
    }

    #[test]
    fn identity_profile_passes() {
        let id = MeasureMap::Identity { dim: 2 };
        let recs = speed_profile(&id, &[1, 2, 3], LaxMode::Plain, &SpeedSpec::InvQ { c: 1.0 }, Sampling::Stratified(4), 2).unwrap();
        assert!(recs.iter().all(|r| r.delta_sum == 0.0 && r.pass && r.d_weak == 0.0));
        assert!(speed_profile(&id, &[2, 1], LaxMode::Plain, &SpeedSpec::InvQ { c: 1.0 }, Sampling::Stratified(4), 2).is_err());
    }
}
