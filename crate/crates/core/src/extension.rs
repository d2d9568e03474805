//! Area-preserving twist maps of the plane and the finite-map extension
//! that moves finitely many points along disjoint straight paths.
//!
//! The unit twist rotates the circle of radius `r` about the origin by the
//! piecewise-linear angle
//!
//! ```text
//! f(r) = 8πr        0   <= r <= 1/8
//!        π          1/8 <= r <= 3/8
//!        4π - 8πr   3/8 <= r <= 1/2
//!        0          r >= 1/2
//! ```
//!
//! so it swaps the antipodal points `±1/4` and is the identity outside the
//! disk of radius 1/2. A [`TwistMap`] is this model conjugated by a
//! similitude: center `c`, scale `R`, support the disk of radius `R/2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::MeasureMap;

/// Radii, in the unit model, where the angle profile has a kink.
pub const PROFILE_BREAKPOINTS: [f64; 4] = [0.0, 0.125, 0.375, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistMap {
    pub center: [f64; 2],
    pub scale: f64,
    /// `+1` for the twist, `-1` for its inverse.
    pub direction: f64,
}

/// Angle profile of the unit model.
pub fn unit_profile(r: f64) -> f64 {
    if r <= 0.125 {
        8.0 * PI * r
    } else if r <= 0.375 {
        PI
    } else if r <= 0.5 {
        4.0 * PI - 8.0 * PI * r
    } else {
        0.0
    }
}

impl TwistMap {
    pub fn new(center: [f64; 2], scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!("twist scale must be positive, got {scale}")));
        }
        Ok(TwistMap { center, scale, direction: 1.0 })
    }

    /// The unit model: center 0, scale 1.
    pub fn unit() -> Self {
        TwistMap { center: [0.0, 0.0], scale: 1.0, direction: 1.0 }
    }

    /// The twist that sends `from` to `to` and is supported in the disk of
    /// diameter `2|to - from|` around their midpoint.
    pub fn swapping(from: [f64; 2], to: [f64; 2]) -> Result<Self> {
        let hop = ((to[0] - from[0]).powi(2) + (to[1] - from[1]).powi(2)).sqrt();
        let mid = [(from[0] + to[0]) / 2.0, (from[1] + to[1]) / 2.0];
        TwistMap::new(mid, 2.0 * hop)
    }

    pub fn inverse(&self) -> Self {
        TwistMap { direction: -self.direction, ..*self }
    }

    pub fn support_radius(&self) -> f64 {
        self.scale / 2.0
    }

    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let rho = (dx * dx + dy * dy).sqrt();
        let r = rho / self.scale;
        if r >= 0.5 {
            return p;
        }
        let theta = self.direction * unit_profile(r);
        let (s, c) = theta.sin_cos();
        [self.center[0] + c * dx - s * dy, self.center[1] + s * dx + c * dy]
    }

    /// Distance from `p` to the nearest circle where the profile kinks.
    pub fn breakpoint_distance(&self, p: [f64; 2]) -> f64 {
        let rho = ((p[0] - self.center[0]).powi(2) + (p[1] - self.center[1]).powi(2)).sqrt();
        PROFILE_BREAKPOINTS
            .iter()
            .map(|b| (rho - b * self.scale).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Point-moving pairs with their chosen hop length, kept for reporting.
#[derive(Debug, Clone, Serialize)]
pub struct MovePlan {
    pub hop: f64,
    pub twists: Vec<TwistMap>,
}

fn seg_point_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / len2).clamp(0.0, 1.0)
    };
    ((a[0] + t * vx - p[0]).powi(2) + (a[1] + t * vy - p[1]).powi(2)).sqrt()
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Euclidean distance between two closed segments.
pub fn segment_distance(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    if segments_cross(a, b, c, d) {
        return 0.0;
    }
    seg_point_distance(a, b, c)
        .min(seg_point_distance(a, b, d))
        .min(seg_point_distance(c, d, a))
        .min(seg_point_distance(c, d, b))
}

fn in_open_square(p: [f64; 2]) -> bool {
    p.iter().all(|&x| x > 0.0 && x < 1.0)
}

fn boundary_distance(p: [f64; 2]) -> f64 {
    p.iter().map(|&x| x.min(1.0 - x)).fold(f64::INFINITY, f64::min)
}

/// Plans the twist chain of [`move_points`].
///
/// Each segment `[x_i, y_i]` is cut into equal hops no longer than a quarter
/// of the slack `δ - max|x_i - y_i|`, a quarter of the smallest gap between
/// segments, and the distance from the segment to the boundary of the square.
pub fn plan_moves(pairs: &[([f64; 2], [f64; 2])], delta: f64) -> Result<MovePlan> {
    if pairs.is_empty() {
        return Ok(MovePlan { hop: 0.0, twists: Vec::new() });
    }
    for (x, y) in pairs {
        for p in [x, y] {
            if !in_open_square(*p) {
                return Err(Error::PointsOnBoundary(p.to_vec()));
            }
        }
    }
    for i in 0..pairs.len() {
        for j in (i + 1)..pairs.len() {
            if pairs[i].0 == pairs[j].0 || pairs[i].1 == pairs[j].1 {
                return Err(Error::InvalidArgument(format!("pairs {i} and {j} share an endpoint")));
            }
        }
    }
    let lengths: Vec<f64> = pairs
        .iter()
        .map(|(x, y)| ((y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2)).sqrt())
        .collect();
    let longest = lengths.iter().cloned().fold(0.0, f64::max);
    if !(longest < delta) {
        return Err(Error::InvalidArgument(format!(
            "displacement {longest} is not below the tolerance {delta}"
        )));
    }
    let mut gap = f64::INFINITY;
    for i in 0..pairs.len() {
        for j in (i + 1)..pairs.len() {
            let d = segment_distance(pairs[i].0, pairs[i].1, pairs[j].0, pairs[j].1);
            if d <= 0.0 {
                return Err(Error::PathsIntersect(i, j));
            }
            gap = gap.min(d);
        }
    }
    let border = pairs
        .iter()
        .map(|(x, y)| boundary_distance(*x).min(boundary_distance(*y)))
        .fold(f64::INFINITY, f64::min);
    let hop_max = ((delta - longest) / 4.0).min(gap / 4.0).min(border);

    let mut twists = Vec::new();
    let mut hop_used: f64 = 0.0;
    for ((x, y), &len) in pairs.iter().zip(&lengths) {
        if len == 0.0 {
            continue;
        }
        let hops = (len / hop_max).ceil().max(1.0) as usize;
        hop_used = hop_used.max(len / hops as f64);
        let at = |t: f64| [x[0] + t * (y[0] - x[0]), x[1] + t * (y[1] - x[1])];
        for l in 1..=hops {
            let from = at((l - 1) as f64 / hops as f64);
            let to = if l == hops { *y } else { at(l as f64 / hops as f64) };
            twists.push(TwistMap::swapping(from, to)?);
        }
    }
    Ok(MovePlan { hop: hop_used, twists })
}

/// An area-preserving map of the square sending each `x_i` to `y_i`,
/// built as a composition of twists with pairwise-disjoint supports across
/// different pairs. Crossing paths are rejected.
pub fn move_points(pairs: &[([f64; 2], [f64; 2])], delta: f64) -> Result<MeasureMap> {
    let plan = plan_moves(pairs, delta)?;
    if plan.twists.is_empty() {
        return Ok(MeasureMap::Identity { dim: 2 });
    }
    Ok(MeasureMap::Composition(plan.twists.into_iter().map(MeasureMap::Twist).collect()))
}

/// Distance from `p` to the nearest kink circle met along the evaluation
/// chain of a map built from twists, measured in each twist's own input
/// coordinates. Other map kinds report infinity.
pub fn chain_breakpoint_distance(map: &MeasureMap, p: &[f64]) -> f64 {
    chain_fold(map, p, |t, x| t.breakpoint_distance(x))
}

/// Like [`chain_breakpoint_distance`], but each distance is divided by the
/// twist's scale, so thin twists are not favoured.
pub fn chain_breakpoint_margin(map: &MeasureMap, p: &[f64]) -> f64 {
    chain_fold(map, p, |t, x| t.breakpoint_distance(x) / t.scale)
}

fn chain_fold(map: &MeasureMap, p: &[f64], score: impl Fn(&TwistMap, [f64; 2]) -> f64 + Copy) -> f64 {
    match map {
        MeasureMap::Twist(t) => score(t, [p[0], p[1]]),
        MeasureMap::Composition(parts) => {
            let mut x = p.to_vec();
            let mut best = f64::INFINITY;
            for part in parts {
                best = best.min(chain_fold(part, &x, score));
                x = part.eval_unchecked(&x);
            }
            best
        }
        _ => f64::INFINITY,
    }
}

fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    det
}

pub const JACOBIAN_STEP: f64 = 1e-5;

/// Central finite-difference Jacobian determinant of `map` at `p`.
pub fn jacobian_determinant(map: &MeasureMap, p: &[f64], h: f64) -> f64 {
    let n = p.len();
    let mut jac = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let fp = map.eval_unchecked(&plus);
        let fm = map.eval_unchecked(&minus);
        for i in 0..n {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    determinant(jac)
}

/// Finite-difference Jacobian determinant taken factor by factor along a
/// composition, each factor at its own input point with step
/// `JACOBIAN_STEP` times its scale. One stencil across a whole chain of thin
/// twists would straddle kinks that the prefix has stretched.
pub fn chain_jacobian_determinant(map: &MeasureMap, p: &[f64]) -> f64 {
    match map {
        MeasureMap::Composition(parts) => {
            let mut x = p.to_vec();
            let mut det = 1.0;
            for part in parts {
                det *= chain_jacobian_determinant(part, &x);
                x = part.eval_unchecked(&x);
            }
            det
        }
        MeasureMap::Twist(t) => jacobian_determinant(map, p, JACOBIAN_STEP * t.scale.min(1.0)),
        _ => jacobian_determinant(map, p, JACOBIAN_STEP),
    }
}

/// Max over `points` of `| |det J| - 1 |` from [`chain_jacobian_determinant`].
pub fn jacobian_check(map: &MeasureMap, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|p| (chain_jacobian_determinant(map, p).abs() - 1.0).abs())
        .fold(0.0, f64::max)
}
