//! Piecewise-affine models of the square with exact rational geometry, their
//! Markov components, and entropy lower bounds from horseshoes.

use num_bigint::BigUint;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: Rational64,
    pub x1: Rational64,
    pub y0: Rational64,
    pub y1: Rational64,
}

impl Serialize for Rect {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let f = |v: Rational64| v.to_f64().unwrap_or(f64::NAN);
        [f(self.x0), f(self.x1), f(self.y0), f(self.y1)].serialize(s)
    }
}

impl Rect {
    pub fn new(x0: Rational64, x1: Rational64, y0: Rational64, y1: Rational64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Rect::new(Rational64::zero(), Rational64::one(), Rational64::zero(), Rational64::one())
    }

    /// `[1/4, 3/4]²`.
    pub fn central() -> Self {
        Rect::new(r(1, 4), r(3, 4), r(1, 4), r(3, 4))
    }

    pub fn has_area(&self) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1
    }

    /// Intersection, possibly degenerate; `None` when disjoint.
    pub fn intersect(&self, o: &Rect) -> Option<Rect> {
        let x0 = self.x0.max(o.x0);
        let x1 = self.x1.min(o.x1);
        let y0 = self.y0.max(o.y0);
        let y1 = self.y1.min(o.y1);
        (x0 <= x1 && y0 <= y1).then_some(Rect { x0, x1, y0, y1 })
    }

    /// Euclidean distance between the two rectangles, as `f64`.
    pub fn distance(&self, o: &Rect) -> f64 {
        let gap = |a0: Rational64, a1: Rational64, b0: Rational64, b1: Rational64| {
            let d = (b0 - a1).max(a0 - b1).max(Rational64::zero());
            d.to_f64().unwrap_or(f64::INFINITY)
        };
        let dx = gap(self.x0, self.x1, o.x0, o.x1);
        let dy = gap(self.y0, self.y1, o.y0, o.y1);
        (dx * dx + dy * dy).sqrt()
    }
}

/// `(x, y) -> (a x + b, c y + d)` on `domain`, with `|a c| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RectBranch {
    pub domain: Rect,
    pub a: Rational64,
    pub b: Rational64,
    pub c: Rational64,
    pub d: Rational64,
}

impl RectBranch {
    /// A branch given by a full affine map `v -> M v + t`. Only diagonal
    /// `M` keeps rectangles axis-aligned.
    pub fn affine(domain: Rect, m: [[Rational64; 2]; 2], t: [Rational64; 2]) -> Result<Self> {
        if !m[0][1].is_zero() || !m[1][0].is_zero() {
            return Err(Error::UnsupportedGeometry("branch rotates or shears rectangles".into()));
        }
        let det = m[0][0] * m[1][1];
        if det.abs() != Rational64::one() {
            return Err(Error::InvalidArgument(format!("branch determinant {det} is not ±1")));
        }
        Ok(RectBranch { domain, a: m[0][0], b: t[0], c: m[1][1], d: t[1] })
    }

    fn image(&self, s: &Rect) -> Rect {
        let (xa, xb) = (self.a * s.x0 + self.b, self.a * s.x1 + self.b);
        let (ya, yb) = (self.c * s.y0 + self.d, self.c * s.y1 + self.d);
        Rect::new(xa.min(xb), xa.max(xb), ya.min(yb), ya.max(yb))
    }

    fn preimage(&self, s: &Rect) -> Rect {
        let (xa, xb) = ((s.x0 - self.b) / self.a, (s.x1 - self.b) / self.a);
        let (ya, yb) = ((s.y0 - self.d) / self.c, (s.y1 - self.d) / self.c);
        Rect::new(xa.min(xb), xa.max(xb), ya.min(yb), ya.max(yb))
    }

    /// `other ∘ self` on the part of `self`'s domain sent into `other`'s.
    fn then(&self, other: &RectBranch) -> Option<RectBranch> {
        let pulled = self.preimage(&other.domain);
        let domain = self.domain.intersect(&pulled).filter(Rect::has_area)?;
        Some(RectBranch {
            domain,
            a: other.a * self.a,
            b: other.a * self.b + other.b,
            c: other.c * self.c,
            d: other.c * self.d + other.d,
        })
    }
}

/// A piecewise-affine, area-preserving partial map of the square.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectModel {
    pub branches: Vec<RectBranch>,
}

impl RectModel {
    pub fn identity() -> Self {
        RectModel {
            branches: vec![RectBranch {
                domain: Rect::unit(),
                a: Rational64::one(),
                b: Rational64::zero(),
                c: Rational64::one(),
                d: Rational64::zero(),
            }],
        }
    }

    /// The `k`-branch baker map `(x, y) -> (kx - j, (y + j)/k)` on the
    /// vertical strips `j/k <= x <= (j+1)/k`.
    pub fn baker(k: usize) -> Self {
        let k = k as i64;
        RectModel {
            branches: (0..k)
                .map(|j| RectBranch {
                    domain: Rect::new(r(j, k), r(j + 1, k), Rational64::zero(), Rational64::one()),
                    a: r(k, 1),
                    b: r(-j, 1),
                    c: r(1, k),
                    d: r(j, k),
                })
                .collect(),
        }
    }

    /// The linear `k`-horseshoe of the baker family: with `w = 1/(2k+1)`,
    /// the horizontal strip `w(2j+1) <= y <= w(2j+2)` is stretched by
    /// `2k+1` vertically and squeezed horizontally onto the vertical strip
    /// `w(2j+1) <= x <= w(2j+2)`, for `j < k`. Strips are separated by `w`.
    pub fn baker_horseshoe(k: usize) -> Self {
        let k = k as i64;
        let s = 2 * k + 1;
        RectModel {
            branches: (0..k)
                .map(|j| RectBranch {
                    domain: Rect::new(Rational64::zero(), Rational64::one(), r(2 * j + 1, s), r(2 * j + 2, s)),
                    a: r(1, s),
                    b: r(2 * j + 1, s),
                    c: r(s, 1),
                    d: r(-(2 * j + 1), 1),
                })
                .collect(),
        }
    }

    /// The `l`-fold composition.
    pub fn power(&self, l: usize) -> Self {
        let mut out = RectModel::identity();
        for _ in 0..l {
            out = out.then(self);
        }
        out
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &RectModel) -> Self {
        RectModel {
            branches: self
                .branches
                .iter()
                .flat_map(|b| other.branches.iter().filter_map(move |o| b.then(o)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Piece {
    /// `f(D) ∩ R2`.
    image: Rect,
    /// Its preimage inside `R1`.
    source: Rect,
}

fn touching(a: &Rect, b: &Rect) -> bool {
    a.intersect(b).is_some()
}

/// Markov components of `f(R1) ∩ R2` whose pieces are single full-height
/// strips strictly inside `R2` in `x`, with full-width preimages strictly
/// inside `R1` in `y`. Returns the component images.
fn components(model: &RectModel, r1: &Rect, r2: &Rect) -> Vec<Rect> {
    let mut pieces = Vec::new();
    for b in &model.branches {
        let Some(d) = b.domain.intersect(r1).filter(Rect::has_area) else { continue };
        let Some(v) = b.image(&d).intersect(r2).filter(Rect::has_area) else { continue };
        pieces.push(Piece { image: v, source: b.preimage(&v) });
    }
    // union-find over touching pieces
    let n = pieces.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if touching(&pieces[i].image, &pieces[j].image) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut size = vec![0usize; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        size[root] += 1;
    }
    (0..n)
        .filter(|&i| size[find(&mut parent, i)] == 1)
        .filter(|&i| {
            let Piece { image: v, source: h } = &pieces[i];
            let vertical = v.y0 == r2.y0 && v.y1 == r2.y1 && v.x0 > r2.x0 && v.x1 < r2.x1;
            let horizontal = h.x0 == r1.x0 && h.x1 == r1.x1 && h.y0 > r1.y0 && h.y1 < r1.y1;
            vertical && horizontal
        })
        .map(|i| pieces[i].image)
        .collect()
}

/// Number of Markov components of `f(R1) ∩ R2`.
pub fn markov_components(model: &RectModel, r1: &Rect, r2: &Rect) -> usize {
    components(model, r1, r2).len()
}

/// `(1/m) log N` where `N` counts the length-`m` itineraries through the
/// Markov components of `f(R) ∩ R`; two different itineraries start at
/// points whose orbits are `ε`-apart at some time before `m` when `ε` is
/// below the smallest gap between components.
pub fn horseshoe_entropy_lower(model: &RectModel, core: &Rect, m: usize, eps: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("itinerary length must be at least 1".into()));
    }
    let verticals = components(model, core, core);
    let k = verticals.len();
    if k == 0 {
        return Ok(0.0);
    }
    let horizontals: Vec<Rect> = model
        .branches
        .iter()
        .flat_map(|b| verticals.iter().filter(move |v| b.image(&b.domain).intersect(v).is_some_and(|x| x.has_area())).map(move |v| b.preimage(v)))
        .collect();
    let mut gap = f64::INFINITY;
    for set in [&verticals, &horizontals] {
        for i in 0..set.len() {
            for j in i + 1..set.len() {
                gap = gap.min(set[i].distance(&set[j]));
            }
        }
    }
    if eps >= gap {
        return Err(Error::GapTooSmall { eps, gap });
    }
    // word a -> b is admissible when V_a crosses H_b
    let step: Vec<Vec<bool>> = verticals
        .iter()
        .map(|v| horizontals.iter().map(|h| v.intersect(h).is_some_and(|x| x.has_area())).collect())
        .collect();
    let mut counts = vec![BigUint::one(); horizontals.len()];
    for _ in 1..m {
        counts = (0..horizontals.len())
            .map(|b| (0..verticals.len()).filter(|&a| step[a][b]).map(|a| counts[a].clone()).sum())
            .collect();
    }
    let total: BigUint = counts.into_iter().sum();
    if total.is_zero() {
        return Ok(0.0);
    }
    let bits = total.bits();
    // ln of a big integer via its top 53 bits
    let shift = bits.saturating_sub(53);
    let top = (&total >> shift).to_f64().unwrap_or(f64::INFINITY);
    Ok((top.ln() + shift as f64 * std::f64::consts::LN_2) / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horseshoe_components() {
        assert_eq!(markov_components(&RectModel::baker_horseshoe(2), &Rect::unit(), &Rect::unit()), 2);
        assert_eq!(markov_components(&RectModel::baker_horseshoe(3), &Rect::unit(), &Rect::unit()), 3);
    }

    #[test]
    fn identity_has_no_crossing() {
        let inner = Rect::central();
        assert_eq!(markov_components(&RectModel::identity(), &inner, &Rect::unit()), 0);
        assert_eq!(markov_components(&RectModel::identity(), &Rect::unit(), &inner), 0);
    }

    #[test]
    fn literal_baker_has_no_strict_component() {
        for k in 2..5 {
            assert_eq!(markov_components(&RectModel::baker(k), &Rect::central(), &Rect::central()), 0);
        }
    }

    #[test]
    fn composition_law() {
        for k in 2..=4 {
            let model = RectModel::baker_horseshoe(k);
            for l in 1..=4 {
                let count = markov_components(&model.power(l), &Rect::unit(), &Rect::unit());
                assert!(count >= k.pow(l as u32), "k={k} l={l}: {count}");
            }
        }
    }

    #[test]
    fn entropy_bounds() {
        for (k, m) in [(2usize, 10usize), (3, 8), (4, 10)] {
            let h = horseshoe_entropy_lower(&RectModel::baker_horseshoe(k), &Rect::unit(), m, 0.05).unwrap();
            assert!(h >= (k as f64).ln() - 1e-9);
        }
        assert_eq!(horseshoe_entropy_lower(&RectModel::identity(), &Rect::unit(), 5, 0.01).unwrap(), 0.0);
        let err = horseshoe_entropy_lower(&RectModel::baker_horseshoe(2), &Rect::unit(), 5, 0.5).unwrap_err();
        assert_eq!(err.name(), "GapTooSmall");
    }

    #[test]
    fn shear_is_rejected() {
        let one = Rational64::one();
        let zero = Rational64::zero();
        let err = RectBranch::affine(Rect::unit(), [[one, one], [zero, one]], [zero, zero]).unwrap_err();
        assert_eq!(err.name(), "UnsupportedGeometry");
        assert!(RectBranch::affine(Rect::unit(), [[r(2, 1), zero], [zero, r(1, 2)]], [zero, zero]).is_ok());
    }
}
