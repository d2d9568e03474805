//! Catalog of measure-preserving maps of the unit cube and torus.
//!
//! Map strings accepted by [`MeasureMap::parse`]:
//!
//! ```text
//! identity                  identity (dimension taken from the caller)
//! translation:0.5,0.0       x + v mod 1
//! torus_linear:2,1,1,1      x -> M x mod 1, M given row-major, det M = ±1
//! baker:3                   (x, y) -> (kx mod 1, (y + floor(kx)) / k)
//! twist:0.5,0.5,0.4         twist of center (0.5, 0.5) and scale 0.4
//! baker:2|translation:0.5,0 composition, applied left to right
//! ```

mod overlap;

pub use overlap::{overlap_matrix, OverlapMatrix, Sampling};

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::TwistMap;
use crate::grid::{DyadicGrid, Topology};
use crate::perm::CellPermutation;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureMap {
    Identity { dim: usize },
    Translation { shift: Vec<f64> },
    /// `x -> M x mod 1` with `M` square, row-major, `det M = ±1`.
    TorusLinear { dim: usize, matrix: Vec<i64> },
    /// The `k`-branch baker map, or its inverse.
    Baker { k: usize, inverse: bool },
    Twist(TwistMap),
    /// Translation of each cell of `grid` onto the cell given by `perm`.
    Dyadic { grid: DyadicGrid, perm: CellPermutation },
    /// Applies the parts left to right.
    Composition(Vec<MeasureMap>),
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

fn parse_floats(args: &str) -> Result<Vec<f64>> {
    args.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::ConfigError(format!("bad number `{t}`")))
        })
        .collect()
}

/// Exact determinant by fraction-free elimination.
fn int_determinant(n: usize, m: &[i64]) -> i128 {
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = (0..n).map(|i| m[i * n..(i + 1) * n].iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Inverse of a unimodular integer matrix via the adjugate.
fn int_inverse(n: usize, m: &[i64]) -> Result<Vec<i64>> {
    let det = int_determinant(n, m);
    if det.abs() != 1 {
        return Err(Error::ConfigError(format!("matrix determinant {det} is not ±1")));
    }
    if n == 1 {
        return Ok(vec![det as i64 * m[0].signum()]);
    }
    let mut inv = vec![0i64; n * n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<i64> = (0..n)
                .filter(|&r| r != i)
                .flat_map(|r| (0..n).filter(move |&c| c != j).map(move |c| m[r * n + c]))
                .collect();
            let cof = if (i + j) % 2 == 0 { 1 } else { -1 } * int_determinant(n - 1, &minor);
            // adjugate is the transposed cofactor matrix
            inv[j * n + i] = (cof * det) as i64;
        }
    }
    Ok(inv)
}

impl MeasureMap {
    /// Parses a map string. `dim` is used by `identity` and checked against
    /// the dimension implied by every other kind.
    pub fn parse(spec: &str, dim: usize) -> Result<MeasureMap> {
        let parts: Vec<&str> = spec.split('|').map(str::trim).collect();
        if parts.len() > 1 {
            let maps = parts.iter().map(|p| Self::parse(p, dim)).collect::<Result<Vec<_>>>()?;
            return Ok(MeasureMap::Composition(maps));
        }
        let (kind, args) = match spec.trim().split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (spec.trim(), None),
        };
        let missing = || Error::ConfigError(format!("`{kind}` needs arguments"));
        let map = match kind {
            "identity" => MeasureMap::Identity { dim },
            "translation" => MeasureMap::Translation { shift: parse_floats(args.ok_or_else(missing)?)? },
            "torus_linear" => {
                let entries: Vec<i64> = args.ok_or_else(missing)?
                    .split(',')
                    .map(|t| t.trim().parse::<i64>().map_err(|_| Error::ConfigError(format!("bad integer `{t}`"))))
                    .collect::<Result<_>>()?;
                let n = (entries.len() as f64).sqrt().round() as usize;
                if n == 0 || n * n != entries.len() {
                    return Err(Error::ConfigError(format!("{} matrix entries do not form a square", entries.len())));
                }
                int_inverse(n, &entries)?;
                MeasureMap::TorusLinear { dim: n, matrix: entries }
            }
            "baker" => {
                let k: usize = args.ok_or_else(missing)?
                    .parse()
                    .map_err(|_| Error::ConfigError(format!("bad baker branch count `{}`", args.unwrap_or(""))))?;
                if k == 0 {
                    return Err(Error::ConfigError("baker needs k >= 1".into()));
                }
                MeasureMap::Baker { k, inverse: false }
            }
            "twist" => {
                let v = parse_floats(args.ok_or_else(missing)?)?;
                if v.len() != 3 {
                    return Err(Error::ConfigError("twist takes cx,cy,R".into()));
                }
                MeasureMap::Twist(TwistMap::new([v[0], v[1]], v[2]).map_err(|e| Error::ConfigError(e.to_string()))?)
            }
            other => return Err(Error::ConfigError(format!("unknown map kind `{other}`"))),
        };
        if map.dim() != dim {
            return Err(Error::ConfigError(format!("map `{spec}` has dimension {}, expected {dim}", map.dim())));
        }
        Ok(map)
    }

    pub fn dim(&self) -> usize {
        match self {
            MeasureMap::Identity { dim } => *dim,
            MeasureMap::Translation { shift } => shift.len(),
            MeasureMap::TorusLinear { dim, .. } => *dim,
            MeasureMap::Baker { .. } | MeasureMap::Twist(_) => 2,
            MeasureMap::Dyadic { grid, .. } => grid.dim(),
            MeasureMap::Composition(parts) => parts.first().map_or(0, MeasureMap::dim),
        }
    }

    /// The space the map naturally lives on; torus as soon as any part wraps.
    pub fn topology(&self) -> Topology {
        match self {
            MeasureMap::Translation { .. } | MeasureMap::TorusLinear { .. } => Topology::Torus,
            MeasureMap::Dyadic { grid, .. } => grid.topology(),
            MeasureMap::Composition(parts) => {
                if parts.iter().any(|p| p.topology() == Topology::Torus) {
                    Topology::Torus
                } else {
                    Topology::Cube
                }
            }
            _ => Topology::Cube,
        }
    }

    /// True when cell overlaps have a closed form on fine enough grids:
    /// identity, translations by finite binary fractions, cell translations.
    pub fn exactness(&self) -> bool {
        match self {
            MeasureMap::Identity { .. } | MeasureMap::Dyadic { .. } => true,
            MeasureMap::Translation { shift } => shift.iter().all(|v| dyadic_order(*v).is_some()),
            MeasureMap::Composition(parts) => parts.iter().all(MeasureMap::exactness),
            _ => false,
        }
    }

    /// The cell permutation this map induces on `grid` when it translates
    /// every cell of `grid` onto another cell; `None` otherwise.
    pub fn cell_permutation(&self, grid: &DyadicGrid) -> Option<CellPermutation> {
        let q = grid.cell_count();
        match self {
            MeasureMap::Identity { dim } if *dim == grid.dim() => Some(CellPermutation::identity(q)),
            MeasureMap::Translation { shift } if shift.len() == grid.dim() => {
                let s = grid.side();
                let steps: Vec<usize> = shift
                    .iter()
                    .map(|v| {
                        let t = v * s as f64;
                        (t.fract() == 0.0).then(|| (t as i64).rem_euclid(s as i64) as usize)
                    })
                    .collect::<Option<_>>()?;
                let image = (0..q)
                    .map(|c| {
                        let k: Vec<usize> = grid.multi_index(c).iter().zip(&steps).map(|(k, d)| (k + d) % s).collect();
                        grid.index_of(&k)
                    })
                    .collect();
                CellPermutation::new(image).ok()
            }
            MeasureMap::Dyadic { grid: coarse, perm } if coarse.dim() == grid.dim() && coarse.order() <= grid.order() => {
                let image = (0..q)
                    .map(|c| grid.locate(&self.eval_unchecked(&grid.center(c))))
                    .collect();
                CellPermutation::new(image).ok()
                    .filter(|_| perm.len() == coarse.cell_count())
            }
            MeasureMap::Composition(parts) => parts
                .iter()
                .try_fold(CellPermutation::identity(q), |acc, p| Some(p.cell_permutation(grid)?.compose(&acc))),
            _ => None,
        }
    }

    /// Evaluates the map, rejecting points outside the closed unit cube.
    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim() || point.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::DomainError(point.to_vec()));
        }
        Ok(self.eval_unchecked(point))
    }

    /// Evaluation without the domain check; wrapping kinds reduce mod 1.
    pub fn eval_unchecked(&self, p: &[f64]) -> Vec<f64> {
        match self {
            MeasureMap::Identity { .. } => p.to_vec(),
            MeasureMap::Translation { shift } => p.iter().zip(shift).map(|(x, v)| wrap(x + v)).collect(),
            MeasureMap::TorusLinear { dim, matrix } => (0..*dim)
                .map(|i| wrap((0..*dim).map(|j| matrix[i * dim + j] as f64 * p[j]).sum()))
                .collect(),
            MeasureMap::Baker { k, inverse } => {
                let kf = *k as f64;
                let (x, y) = (p[0], p[1]);
                if !inverse {
                    let j = (kf * x).floor().clamp(0.0, kf - 1.0);
                    vec![kf * x - j, (y + j) / kf]
                } else {
                    let j = (kf * y).floor().clamp(0.0, kf - 1.0);
                    vec![(x + j) / kf, kf * y - j]
                }
            }
            MeasureMap::Twist(t) => t.eval([p[0], p[1]]).to_vec(),
            MeasureMap::Dyadic { grid, perm } => {
                let c = grid.locate(p);
                let from = grid.center(c);
                let to = grid.center(perm.apply(c));
                p.iter().zip(from.iter().zip(&to)).map(|(x, (a, b))| x + (b - a)).collect()
            }
            MeasureMap::Composition(parts) => {
                let mut x = p.to_vec();
                for part in parts {
                    x = part.eval_unchecked(&x);
                }
                x
            }
        }
    }

    pub fn inverse(&self) -> MeasureMap {
        match self {
            MeasureMap::Identity { dim } => MeasureMap::Identity { dim: *dim },
            MeasureMap::Translation { shift } => MeasureMap::Translation { shift: shift.iter().map(|v| -v).collect() },
            MeasureMap::TorusLinear { dim, matrix } => MeasureMap::TorusLinear {
                dim: *dim,
                matrix: int_inverse(*dim, matrix).expect("catalog matrices are unimodular"),
            },
            MeasureMap::Baker { k, inverse } => MeasureMap::Baker { k: *k, inverse: !inverse },
            MeasureMap::Twist(t) => MeasureMap::Twist(t.inverse()),
            MeasureMap::Dyadic { grid, perm } => MeasureMap::Dyadic { grid: *grid, perm: perm.inverse() },
            MeasureMap::Composition(parts) => MeasureMap::Composition(parts.iter().rev().map(MeasureMap::inverse).collect()),
        }
    }

    /// `self` applied `p` times.
    pub fn iterate(&self, p: usize) -> MeasureMap {
        if p == 0 {
            return MeasureMap::Identity { dim: self.dim() };
        }
        MeasureMap::Composition(vec![self.clone(); p])
    }
}

/// Smallest `m` with `v * 2^m` an integer, for `m <= 52`.
fn dyadic_order(v: f64) -> Option<u32> {
    (0..=52u32).find(|&m| (v * f64::powi(2.0, m as i32)).fract() == 0.0)
}

impl fmt::Display for MeasureMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[String]| v.join(",");
        match self {
            MeasureMap::Identity { .. } => write!(f, "identity"),
            MeasureMap::Translation { shift } => {
                write!(f, "translation:{}", join(&shift.iter().map(|v| v.to_string()).collect::<Vec<_>>()))
            }
            MeasureMap::TorusLinear { matrix, .. } => {
                write!(f, "torus_linear:{}", join(&matrix.iter().map(|v| v.to_string()).collect::<Vec<_>>()))
            }
            MeasureMap::Baker { k, inverse: false } => write!(f, "baker:{k}"),
            MeasureMap::Baker { k, inverse: true } => write!(f, "baker_inverse:{k}"),
            MeasureMap::Twist(t) if t.direction < 0.0 => {
                write!(f, "twist_inverse:{},{},{}", t.center[0], t.center[1], t.scale)
            }
            MeasureMap::Twist(t) => write!(f, "twist:{},{},{}", t.center[0], t.center[1], t.scale),
            MeasureMap::Dyadic { grid, .. } => write!(f, "dyadic:{}", grid.cell_count()),
            MeasureMap::Composition(parts) => {
                let s: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "{}", s.join("|"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn eval_examples() {
        let id = MeasureMap::parse("identity", 2).unwrap();
        assert_eq!(id.eval(&[0.3, 0.7]).unwrap(), vec![0.3, 0.7]);
        let cat = MeasureMap::parse("torus_linear:2,1,1,1", 2).unwrap();
        assert_eq!(cat.eval(&[0.5, 0.5]).unwrap(), vec![0.5, 0.0]);
        let t = MeasureMap::parse("translation:0.5,0", 2).unwrap();
        assert_eq!(t.eval(&[0.75, 0.2]).unwrap(), vec![0.25, 0.2]);
    }

    #[test]
    fn domain_error() {
        let id = MeasureMap::Identity { dim: 2 };
        assert_eq!(id.eval(&[1.5, 0.2]).unwrap_err().name(), "DomainError");
        assert_eq!(id.eval(&[0.5]).unwrap_err().name(), "DomainError");
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "torus_linear:2,1,1", "torus_linear:2,0,0,2", "baker:x", "warp:1", "translation:", "twist:0.5,0.5"] {
            assert_eq!(MeasureMap::parse(bad, 2).unwrap_err().name(), "ConfigError", "{bad}");
        }
        assert!(MeasureMap::parse("translation:0.5", 2).is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["identity", "translation:0.5,0.25", "torus_linear:2,1,1,1", "baker:3", "twist:0.5,0.5,0.4", "baker:2|translation:0.5,0"] {
            let m = MeasureMap::parse(s, 2).unwrap();
            assert_eq!(MeasureMap::parse(&m.to_string(), 2).unwrap(), m);
        }
    }

    #[test]
    fn integer_inverse() {
        assert_eq!(int_inverse(2, &[2, 1, 1, 1]).unwrap(), vec![1, -1, -1, 2]);
        assert_eq!(int_determinant(3, &[2, 0, 1, 1, 1, 0, 0, 3, 1]), 5);
        let m = [1, 2, 0, 0, 1, 3, 0, 0, 1];
        let inv = int_inverse(3, &m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: i64 = (0..3).map(|k| m[i * 3 + k] * inv[k * 3 + j]).sum();
                assert_eq!(v, (i == j) as i64);
            }
        }
    }

    #[test]
    fn inverses_round_trip() {
        let maps = [
            MeasureMap::parse("identity", 2).unwrap(),
            MeasureMap::parse("translation:0.3819660112501051,0.125", 2).unwrap(),
            MeasureMap::parse("torus_linear:2,1,1,1", 2).unwrap(),
            MeasureMap::parse("baker:2", 2).unwrap(),
            MeasureMap::parse("baker:3", 2).unwrap(),
            MeasureMap::parse("twist:0.5,0.5,0.6", 2).unwrap(),
            MeasureMap::parse("baker:3|twist:0.4,0.6,0.3", 2).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for map in &maps {
            let inv = map.inverse();
            for _ in 0..10_000 {
                let p = vec![rng.random::<f64>(), rng.random::<f64>()];
                let back = inv.eval_unchecked(&map.eval(&p).unwrap());
                let d = map.topology().distance(&back, &p);
                assert!(d < 1e-12, "{map}: {p:?} -> {back:?}");
            }
        }
    }

    #[test]
    fn dyadic_translation_permutes_cells() {
        let g = DyadicGrid::new(2, 1, Topology::Torus).unwrap();
        let t = MeasureMap::parse("translation:0.5,0", 2).unwrap();
        assert!(t.exactness());
        assert_eq!(t.cell_permutation(&g).unwrap().image(), &[1, 0, 3, 2]);
        let irr = MeasureMap::parse("torus_linear:2,1,1,1", 2).unwrap();
        assert!(irr.cell_permutation(&g).is_none());
        let fine = DyadicGrid::new(2, 3, Topology::Torus).unwrap();
        let d = MeasureMap::Dyadic { grid: g, perm: CellPermutation::new(vec![1, 0, 3, 2]).unwrap() };
        assert_eq!(d.cell_permutation(&fine), t.cell_permutation(&fine));
        assert!(close(&d.eval_unchecked(&[0.1, 0.7]), &[0.6, 0.7], 1e-15));
    }
}
