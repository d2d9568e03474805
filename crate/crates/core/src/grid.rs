//! Dyadic subdivisions of the unit cube and of the flat torus.
//!
//! A grid of dimension `n` and order `m` has `q = 2^(n m)` congruent cells of
//! side `2^-m`. Cells are indexed row-major with axis 0 varying fastest:
//! the cell with multi-index `(k_0, ..., k_{n-1})` has index
//! `k_0 + k_1 s + ... + k_{n-1} s^(n-1)` where `s = 2^m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default limit on `log2` of the number of cells any grid or refined grid
/// may allocate.
pub const DEFAULT_BIT_BUDGET: u32 = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Cube,
    Torus,
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cube" => Ok(Topology::Cube),
            "torus" => Ok(Topology::Torus),
            other => Err(Error::ConfigError(format!("unknown topology `{other}`"))),
        }
    }
}

impl Topology {
    /// Distance between two points of the unit cube: Euclidean on the cube,
    /// the quotient metric on the torus.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let d = (x - y).abs();
                let d = match self {
                    Topology::Cube => d,
                    Topology::Torus => {
                        let d = d.rem_euclid(1.0);
                        d.min(1.0 - d)
                    }
                };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicGrid {
    dim: usize,
    order: u32,
    topology: Topology,
    #[serde(skip, default = "default_budget")]
    bit_budget: u32,
}

fn default_budget() -> u32 {
    DEFAULT_BIT_BUDGET
}

impl DyadicGrid {
    pub fn new(dim: usize, order: u32, topology: Topology) -> Result<Self> {
        Self::with_bit_budget(dim, order, topology, DEFAULT_BIT_BUDGET)
    }

    pub fn with_bit_budget(dim: usize, order: u32, topology: Topology, bit_budget: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("grid dimension must be at least 1".into()));
        }
        let bits = (dim as u64) * u64::from(order);
        if bits > u64::from(bit_budget) || bits >= usize::BITS as u64 {
            return Err(Error::CapacityExceeded {
                bits: bits.min(u64::from(u32::MAX)) as u32,
                budget: bit_budget,
            });
        }
        Ok(DyadicGrid { dim, order, topology, bit_budget })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn bit_budget(&self) -> u32 {
        self.bit_budget
    }

    /// Number of cells along one axis, `2^m`.
    pub fn side(&self) -> usize {
        1usize << self.order
    }

    /// `q = 2^(n m)`.
    pub fn cell_count(&self) -> usize {
        1usize << (self.dim as u32 * self.order)
    }

    pub fn side_length(&self) -> f64 {
        1.0 / self.side() as f64
    }

    /// Measure of one cell as the exact fraction `(1, q)`.
    pub fn cell_measure(&self) -> (u64, u64) {
        (1, self.cell_count() as u64)
    }

    /// Same grid at a finer order `m + refine`.
    pub fn refined(&self, refine: u32) -> Result<DyadicGrid> {
        DyadicGrid::with_bit_budget(self.dim, self.order + refine, self.topology, self.bit_budget)
    }

    /// Same dimension and order, but a different topology.
    pub fn with_topology(&self, topology: Topology) -> DyadicGrid {
        DyadicGrid { topology, ..*self }
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        let s = self.side();
        let mut rest = idx;
        (0..self.dim)
            .map(|_| {
                let k = rest % s;
                rest /= s;
                k
            })
            .collect()
    }

    pub fn index_of(&self, multi: &[usize]) -> usize {
        let s = self.side();
        multi.iter().rev().fold(0, |acc, &k| acc * s + k)
    }

    pub fn contains_index(&self, idx: usize) -> bool {
        idx < self.cell_count()
    }

    /// Center `((k_i + 1/2) / 2^m)_i` of a cell.
    pub fn center(&self, idx: usize) -> Vec<f64> {
        let h = self.side_length();
        self.multi_index(idx).into_iter().map(|k| (k as f64 + 0.5) * h).collect()
    }

    /// Diameter of a cell in the grid's metric. On the torus a side longer
    /// than 1/2 wraps, so each axis contributes at most 1/2.
    pub fn cell_diameter(&self) -> f64 {
        let h = match self.topology {
            Topology::Cube => self.side_length(),
            Topology::Torus => self.side_length().min(0.5),
        };
        (self.dim as f64).sqrt() * h
    }

    pub fn cell_geometry(&self, idx: usize) -> Result<(Vec<f64>, f64)> {
        if !self.contains_index(idx) {
            return Err(Error::InvalidArgument(format!(
                "cell {idx} out of range for {} cells",
                self.cell_count()
            )));
        }
        Ok((self.center(idx), self.cell_diameter()))
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.topology.distance(a, b)
    }

    pub fn center_distance(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        self.distance(&self.center(a), &self.center(b))
    }

    /// Index of the cell containing `point`. Coordinates are clamped into
    /// `[0, 1)` so that points on the upper boundary land in the last cell.
    pub fn locate(&self, point: &[f64]) -> usize {
        let s = self.side();
        let sf = s as f64;
        point.iter().rev().fold(0usize, |acc, &x| {
            let k = (x * sf).floor();
            let k = if k < 0.0 { 0 } else { (k as usize).min(s - 1) };
            acc * s + k
        })
    }

    /// True when the two cells share a face (wrapping on the torus).
    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        let s = self.side();
        let ka = self.multi_index(a);
        let kb = self.multi_index(b);
        let mut differing = 0;
        for (x, y) in ka.iter().zip(&kb) {
            if x == y {
                continue;
            }
            differing += 1;
            let d = x.abs_diff(*y);
            let ok = d == 1 || (self.topology == Topology::Torus && d == s - 1);
            if !ok {
                return false;
            }
        }
        differing == 1
    }

    /// Hamiltonian cycle through all cells in which consecutive cells, and
    /// the last and first, share a face.
    ///
    /// A single cell gives `[0]`. In dimension one the cube has no cycle once
    /// the side exceeds two cells; the torus always has one.
    pub fn snake_order(&self) -> Result<Vec<usize>> {
        let s = self.side();
        if self.cell_count() == 1 {
            return Ok(vec![0]);
        }
        if self.dim == 1 {
            if s > 2 && self.topology == Topology::Cube {
                return Err(Error::NoCycle { dim: 1, side: s });
            }
            return Ok((0..s).collect());
        }
        // Boustrophedon path over the first n-1 axes, treated as the x axis
        // of a two-dimensional `path x side` grid whose y axis is the last
        // axis. Column x = 0 is reserved for the return trip.
        let path = boustrophedon(self.dim - 1, s);
        let len = path.len();
        let stride = s.pow(self.dim as u32 - 1);
        let mut order = Vec::with_capacity(self.cell_count());
        for y in 0..s {
            if y == 0 {
                order.push(path[0]);
            }
            if y % 2 == 0 {
                order.extend((1..len).map(|x| path[x] + y * stride));
            } else {
                order.extend((1..len).rev().map(|x| path[x] + y * stride));
            }
        }
        order.extend((1..s).rev().map(|y| path[0] + y * stride));
        Ok(order)
    }

    /// The snake cycle when one exists, otherwise the boustrophedon path.
    pub fn traversal_order(&self) -> Vec<usize> {
        self.snake_order()
            .unwrap_or_else(|_| boustrophedon(self.dim, self.side()))
    }
}

/// Reflected row-major walk over a `dims`-dimensional grid of the given side:
/// consecutive entries differ by one step along a single axis.
fn boustrophedon(dims: usize, side: usize) -> Vec<usize> {
    let mut path = vec![0usize];
    let mut stride = 1usize;
    for _ in 0..dims {
        let mut next = Vec::with_capacity(path.len() * side);
        for k in 0..side {
            if k % 2 == 0 {
                next.extend(path.iter().map(|&p| p + k * stride));
            } else {
                next.extend(path.iter().rev().map(|&p| p + k * stride));
            }
        }
        path = next;
        stride *= side;
    }
    path
}
