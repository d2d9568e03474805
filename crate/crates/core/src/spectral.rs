//! Spectral measures of the Koopman operator `(U v)(i) = v(σ(i))` of a
//! cell permutation, Cesàro mixing averages, and rigidity.
//!
//! On a cycle `x_0, ..., x_{L-1}` with `σ(x_t) = x_{t+1}` the vectors
//! `e_j(x_t) = ω^(jt) / √L`, `ω = e^(2πi/L)`, satisfy `U e_j = ω^j e_j`, so
//! a vector `v` puts mass `|Σ_t v(x_t) ω^(-jt)|² / L` at angle `2πj/L`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::metrics::weak_distance_from;
use crate::perm::CellPermutation;

/// An atom at angle `2π num / den`, with `num/den` reduced and in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub num: u64,
    pub den: u64,
    pub weight: f64,
}

impl Atom {
    pub fn angle(&self) -> f64 {
        2.0 * PI * self.num as f64 / self.den as f64
    }
}

/// Finitely many atoms on the circle, sorted by angle, angles distinct.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SpectralMeasure {
    pub atoms: Vec<Atom>,
}

/// Relative weight below which an atom is treated as rounding noise.
const NOISE: f64 = 1e-24;

impl SpectralMeasure {
    /// Collects `(num, den, weight)` triples, reducing and merging angles.
    fn collect(raw: impl IntoIterator<Item = (u64, u64, f64)>) -> Self {
        let mut merged: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for (num, den, w) in raw {
            let g = num.gcd(&den);
            *merged.entry((num / g, den / g)).or_insert(0.0) += w;
        }
        let total: f64 = merged.values().sum();
        let mut atoms: Vec<Atom> = merged
            .into_iter()
            .filter(|&(_, w)| w > NOISE * total.max(f64::MIN_POSITIVE))
            .map(|((num, den), weight)| Atom { num, den, weight })
            .collect();
        atoms.sort_by(|a, b| (a.num as u128 * b.den as u128).cmp(&(b.num as u128 * a.den as u128)));
        SpectralMeasure { atoms }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// `(U v)(i) = v(σ(i))`.
pub fn koopman_apply(sigma: &CellPermutation, v: &[Complex64]) -> Vec<Complex64> {
    (0..sigma.len()).map(|i| v[sigma.apply(i)]).collect()
}

/// `|Σ_t x_t ω^(-jt)|²` for every `j`, by direct summation.
fn power_spectrum(x: &[Complex64]) -> Vec<f64> {
    let l = x.len();
    let twiddle: Vec<Complex64> = (0..l).map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / l as f64)).collect();
    (0..l)
        .map(|j| {
            let s: Complex64 = x.iter().enumerate().map(|(t, &v)| v * twiddle[(j * t) % l]).sum();
            s.norm_sqr()
        })
        .collect()
}

/// Spectral measure of `v` for the Koopman operator of `σ`; total mass is
/// `‖v‖²`.
pub fn spectral_measure_of_vector(sigma: &CellPermutation, v: &[Complex64]) -> Result<SpectralMeasure> {
    if v.len() != sigma.len() {
        return Err(Error::InvalidArgument(format!("vector of length {} for {} cells", v.len(), sigma.len())));
    }
    let mut raw = Vec::new();
    for cycle in sigma.cycles() {
        let l = cycle.len();
        let x: Vec<Complex64> = cycle.iter().map(|&c| v[c]).collect();
        if x.iter().all(|z| z.is_zero()) {
            continue;
        }
        for (j, p) in power_spectrum(&x).into_iter().enumerate() {
            raw.push((j as u64, l as u64, p / l as f64));
        }
    }
    Ok(SpectralMeasure::collect(raw))
}

/// Real-vector convenience wrapper.
pub fn spectral_measure_of_real(sigma: &CellPermutation, v: &[f64]) -> Result<SpectralMeasure> {
    let z: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    spectral_measure_of_vector(sigma, &z)
}

/// `Σ_i 2^-i m_{ψ_i} / (1 - 2^-q)` over the normalized cell indicators
/// `ψ_1, ..., ψ_q` in index order. An indicator in a cycle of length `L` has
/// the uniform measure on the `L`-th roots of unity.
pub fn spectral_type(sigma: &CellPermutation) -> SpectralMeasure {
    let q = sigma.len();
    let norm = 1.0 - f64::powi(2.0, -(q.min(2000) as i32));
    let ids = sigma.cycle_ids();
    let lengths = sigma.cycle_lengths();
    // weight per cycle, then spread over its roots
    let mut per_cycle = vec![0.0f64; lengths.len()];
    for i in 0..q {
        per_cycle[ids[i]] += f64::powi(2.0, -(i as i32 + 1)) / norm;
    }
    let raw = lengths
        .iter()
        .zip(&per_cycle)
        .flat_map(|(&l, &w)| (0..l).map(move |j| (j as u64, l as u64, w / l as f64)));
    SpectralMeasure::collect(raw)
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// True when no two atoms closer than `tol` carry positive weight in both.
pub fn mutual_singularity(m1: &SpectralMeasure, m2: &SpectralMeasure, tol: f64) -> bool {
    !m1.atoms.iter().filter(|a| a.weight > 0.0).any(|a| {
        m2.atoms
            .iter()
            .filter(|b| b.weight > 0.0)
            .any(|b| circular_gap(a.angle(), b.angle()) <= tol)
    })
}

/// Exact rational, serialized as `{"num": .., "den": ..}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exact(pub Ratio<i128>);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Frac {
            num: String,
            den: String,
        }
        Frac { num: self.0.numer().to_string(), den: self.0.denom().to_string() }.serialize(s)
    }
}

impl Exact {
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CesaroDiagnostic {
    /// `a_n = (1/n) Σ_{i<n} |μ(σ^i E1 ∩ E2) - μ(E1) μ(E2)|` for `n = 1..=N`.
    pub partial: Vec<Exact>,
    /// `(1/N) Σ_{i<N} μ(σ^i E1 ∩ E2)`.
    pub unsigned_average: Exact,
    /// `μ(E1) μ(E2)`.
    pub product: Exact,
}

fn as_mask(q: usize, set: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; q];
    for &c in set {
        if c >= q {
            return Err(Error::InvalidArgument(format!("cell {c} out of range")));
        }
        mask[c] = true;
    }
    Ok(mask)
}

/// Cesàro averages of the correlations of `E1` and `E2` under `σ`, in exact
/// rational arithmetic.
pub fn cesaro_mixing_diagnostic(sigma: &CellPermutation, e1: &[usize], e2: &[usize], n: usize) -> Result<CesaroDiagnostic> {
    let q = sigma.len();
    if n == 0 || q == 0 {
        return Err(Error::InvalidArgument("need N >= 1 and a nonempty ground set".into()));
    }
    let mut current = as_mask(q, e1)?;
    let target = as_mask(q, e2)?;
    let qi = q as i128;
    let size1 = current.iter().filter(|&&b| b).count() as i128;
    let size2 = target.iter().filter(|&&b| b).count() as i128;
    let product = Ratio::new(size1 * size2, qi * qi);
    let mut signed_sum = Ratio::<i128>::zero();
    let mut plain_sum = Ratio::<i128>::zero();
    let mut partial = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            let mut next = vec![false; q];
            for (c, &inside) in current.iter().enumerate() {
                if inside {
                    next[sigma.apply(c)] = true;
                }
            }
            current = next;
        }
        let hits = current.iter().zip(&target).filter(|(a, b)| **a && **b).count() as i128;
        let overlap = Ratio::new(hits, qi);
        let gap = overlap - product;
        signed_sum += if gap < Ratio::zero() { -gap } else { gap };
        plain_sum += overlap;
        partial.push(Exact(signed_sum / Ratio::from_integer((i + 1) as i128)));
    }
    Ok(CesaroDiagnostic {
        partial,
        unsigned_average: Exact(plain_sum / Ratio::from_integer(n as i128)),
        product: Exact(product),
    })
}

/// `σ^k` for an arbitrary-precision exponent.
pub fn pow_big(sigma: &CellPermutation, k: &BigUint) -> CellPermutation {
    let mut image = vec![0; sigma.len()];
    for cycle in sigma.cycles() {
        let l = cycle.len();
        let shift = (k % BigUint::from(l)).to_usize().unwrap_or(0);
        for (i, &x) in cycle.iter().enumerate() {
            image[x] = cycle[(i + shift) % l];
        }
    }
    CellPermutation::new(image).expect("cycle rotation is a bijection")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rigidity {
    /// Least common multiple of the cycle lengths, in decimal.
    #[serde(serialize_with = "decimal")]
    pub period: BigUint,
    pub weak_distance: f64,
}

fn decimal<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// The period `d` of `σ` and `d_weak(σ^d, id)`. With a grid the distance
/// uses cell centers; without one, cells that move count as distance 1.
pub fn rigidity_detector(sigma: &CellPermutation, grid: Option<&DyadicGrid>) -> Rigidity {
    let period = sigma.order();
    let power = pow_big(sigma, &period);
    let d: Vec<f64> = (0..sigma.len())
        .map(|i| match grid {
            Some(g) => g.center_distance(power.apply(i), i),
            None => (power.apply(i) != i) as u8 as f64,
        })
        .collect();
    Rigidity { period, weak_distance: weak_distance_from(&d) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cycle(q: usize) -> CellPermutation {
        CellPermutation::from_cycles(q, &[(0..q).collect()]).unwrap()
    }

    #[test]
    fn indicator_on_a_cycle_is_uniform() {
        let mut v = vec![0.0; 8];
        v[3] = 1.0;
        let m = spectral_measure_of_real(&cycle(8), &v).unwrap();
        assert_eq!(m.atoms.len(), 8);
        for (j, a) in m.atoms.iter().enumerate() {
            assert_eq!(Ratio::new(a.num, a.den), Ratio::new(j as u64, 8));
            assert!((a.weight - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_vector_sits_at_zero() {
        let q = 16;
        let v = vec![1.0 / (q as f64).sqrt(); q];
        let m = spectral_measure_of_real(&cycle(q), &v).unwrap();
        assert_eq!(m.atoms.len(), 1);
        assert_eq!((m.atoms[0].num, m.atoms[0].den), (0, 1));
        assert!((m.atoms[0].weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_transpositions() {
        let sigma = CellPermutation::from_cycles(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        let m = spectral_measure_of_real(&sigma, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let pairs: Vec<(u64, u64)> = m.atoms.iter().map(|a| (a.num, a.den)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        assert!(m.atoms.iter().all(|a| (a.weight - 0.5).abs() < 1e-15));
        let t = spectral_type(&sigma);
        assert_eq!(t.atoms.len(), 2);
        assert!((t.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_type_examples() {
        let id = spectral_type(&CellPermutation::identity(5));
        assert_eq!(id.atoms.len(), 1);
        assert!((id.atoms[0].weight - 1.0).abs() < 1e-15);
        let c = spectral_type(&cycle(12));
        assert_eq!(c.atoms.len(), 12);
        assert!(c.atoms.iter().all(|a| a.weight > 0.0));
        assert!((c.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mass_and_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let q = rng.random_range(1..=64);
            let mut img: Vec<usize> = (0..q).collect();
            img.shuffle(&mut rng);
            let sigma = CellPermutation::new(img).unwrap();
            let v: Vec<Complex64> = (0..q).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let w: Vec<Complex64> = (0..q).map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            let m = spectral_measure_of_vector(&sigma, &v).unwrap();
            assert!((m.total_mass() - norm).abs() < 1e-12 * norm.max(1.0));
            let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 { a.iter().zip(b).map(|(x, y)| x * y.conj()).sum() };
            let (uv, uw) = (koopman_apply(&sigma, &v), koopman_apply(&sigma, &w));
            assert!((inner(&uv, &uw) - inner(&v, &w)).norm() < 1e-12);
        }
    }

    #[test]
    fn invariant_vectors_concentrate_at_zero() {
        let sigma = CellPermutation::from_cycles(6, &[vec![0, 2, 4], vec![1, 3], vec![5]]).unwrap();
        let constant_on_cycles = [2.0, -1.0, 2.0, -1.0, 2.0, 0.5];
        let m = spectral_measure_of_real(&sigma, &constant_on_cycles).unwrap();
        assert!(m.atoms.iter().all(|a| a.num == 0));
        let not = [2.0, -1.0, 2.0, 1.0, 2.0, 0.5];
        let m = spectral_measure_of_real(&sigma, &not).unwrap();
        assert!(m.atoms.iter().any(|a| a.num != 0));
    }

    #[test]
    fn cesaro_identity() {
        let sigma = cycle(12);
        let d = cesaro_mixing_diagnostic(&sigma, &[0, 3, 4], &[1, 2, 3, 4, 9], 12).unwrap();
        assert_eq!(d.unsigned_average.0, Ratio::new(15, 144));
        assert_eq!(d.product.0, Ratio::new(15, 144));
        let id = CellPermutation::identity(8);
        let d = cesaro_mixing_diagnostic(&id, &[1, 2], &[1, 2], 5).unwrap();
        assert!(d.partial.iter().all(|a| a.0 == Ratio::new(1, 4) - Ratio::new(1, 16)));
    }

    #[test]
    fn single_cell_cesaro_by_enumeration() {
        let q = 6;
        let d = cesaro_mixing_diagnostic(&cycle(q), &[2], &[2], q).unwrap();
        // overlap 1/q at i = 0 and 0 afterwards
        let expected = (Ratio::new(1, 6) - Ratio::new(1, 36) + Ratio::new(1, 36) * 5) / 6;
        assert_eq!(expected, Ratio::new(5, 108));
        assert_eq!(d.partial[q - 1].0, expected);
    }

    #[test]
    fn rigidity() {
        let r = rigidity_detector(&cycle(9), None);
        assert_eq!((r.period.clone(), r.weak_distance), (BigUint::from(9u32), 0.0));
        let s = CellPermutation::from_cycles(8, &[vec![0, 1, 2], vec![3, 4, 5, 6, 7]]).unwrap();
        assert_eq!(rigidity_detector(&s, None).period, BigUint::from(15u32));
        let id = rigidity_detector(&CellPermutation::identity(4), None);
        assert_eq!((id.period, id.weak_distance), (BigUint::from(1u32), 0.0));
    }

    #[test]
    fn singularity() {
        let roots = |l: u64, skip_zero: bool| SpectralMeasure {
            atoms: (0..l)
                .filter(|&j| !(skip_zero && j == 0))
                .map(|j| {
                    let g = j.gcd(&l);
                    Atom { num: j / g, den: l / g, weight: 1.0 / l as f64 }
                })
                .collect(),
        };
        assert!(!mutual_singularity(&roots(3, false), &roots(4, false), 1e-9));
        assert!(mutual_singularity(&roots(3, true), &roots(4, true), 1e-9));
        assert!(!mutual_singularity(&roots(5, false), &roots(5, false), 1e-9));
        assert!(mutual_singularity(&SpectralMeasure::default(), &SpectralMeasure::default(), 1e-9));
    }
}
