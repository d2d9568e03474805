//! Turning a cell permutation into one cycle, then into two coprime cycles,
//! by transpositions of neighbours in a cyclic ordering of the cells.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::perm::CellPermutation;

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; false when already merged.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

fn positions(ordering: &[usize], q: usize) -> Result<Vec<usize>> {
    if ordering.len() != q {
        return Err(Error::InvalidArgument(format!("ordering has {} entries for {q} cells", ordering.len())));
    }
    let mut pos = vec![usize::MAX; q];
    for (k, &c) in ordering.iter().enumerate() {
        if c >= q || pos[c] != usize::MAX {
            return Err(Error::InvalidArgument(format!("ordering repeats or overflows at cell {c}")));
        }
        pos[c] = k;
    }
    Ok(pos)
}

/// Swaps the values `a` and `b` in a permutation stored with its inverse,
/// i.e. replaces `p` by `(a b) ∘ p`.
fn left_swap(image: &mut [usize], inverse: &mut [usize], a: usize, b: usize) {
    let (xa, xb) = (inverse[a], inverse[b]);
    image[xa] = b;
    image[xb] = a;
    inverse[a] = xb;
    inverse[b] = xa;
}

/// Returns `(τ, τ∘σ)` with `τ∘σ` a single cycle.
///
/// Positions `k` along `ordering` are read cyclically. The first pass walks
/// the pairs `(2i, 2i+1)`, the second `(2i+1, 2i+2)`; a transposition of the
/// two cells at a pair is applied whenever they currently lie in different
/// cycles, which merges those cycles. Every position is touched by at most
/// one transposition per pass, so `τ` moves each position by at most 2.
pub fn cyclicize(sigma: &CellPermutation, ordering: &[usize]) -> Result<(CellPermutation, CellPermutation)> {
    let q = sigma.len();
    let pos = positions(ordering, q)?;
    // σ conjugated into position space
    let mut current: Vec<usize> = (0..q).map(|k| pos[sigma.apply(ordering[k])]).collect();
    let mut current_inv = vec![0; q];
    for (k, &v) in current.iter().enumerate() {
        current_inv[v] = k;
    }
    let mut sets = DisjointSets::new(q);
    for (k, &v) in current.iter().enumerate() {
        sets.union(k, v);
    }
    let mut tau: Vec<usize> = (0..q).collect();
    let mut tau_inv: Vec<usize> = (0..q).collect();
    for first in [0, 1] {
        let mut a = first;
        while a + 1 < q {
            if sets.union(a, a + 1) {
                left_swap(&mut current, &mut current_inv, a, a + 1);
                left_swap(&mut tau, &mut tau_inv, a, a + 1);
            }
            a += 2;
        }
    }
    let tau_cells: Vec<usize> = (0..q).map(|c| ordering[tau[pos[c]]]).collect();
    let tau = CellPermutation::new(tau_cells)?;
    let merged = tau.compose(sigma);
    debug_assert!(q == 0 || merged.is_cyclic());
    Ok((tau, merged))
}

/// Largest cyclic displacement `min(|τ(k) - k|, q - |τ(k) - k|)` of a
/// permutation read in positions along `ordering`.
pub fn cyclic_displacement(tau: &CellPermutation, ordering: &[usize]) -> Result<usize> {
    let q = tau.len();
    let pos = positions(ordering, q)?;
    Ok((0..q)
        .map(|k| {
            let d = pos[tau.apply(ordering[k])].abs_diff(k);
            d.min(q - d)
        })
        .max()
        .unwrap_or(0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bicyclization {
    pub perm: CellPermutation,
    /// The two cells whose transposition split the cycle.
    pub pair: (usize, usize),
    pub lengths: (usize, usize),
}

/// Splits a single even-length cycle into two odd cycles.
///
/// Scans consecutive pairs `(ordering[k], ordering[k+1])`, wrapping at the
/// end, and picks the first pair whose transition time along `σ` is odd.
/// Composing `(a b) ∘ σ` then leaves cycles of lengths `t` and `q - t`.
pub fn bicyclize(sigma: &CellPermutation, ordering: &[usize]) -> Result<Bicyclization> {
    let q = sigma.len();
    positions(ordering, q)?;
    let cycles = sigma.cycles();
    if cycles.len() != 1 {
        return Err(Error::NotCyclic { cycles: cycles.len() });
    }
    if q % 2 == 1 {
        return Err(Error::OddOrder(q));
    }
    let mut time = vec![0usize; q];
    for (t, &x) in cycles[0].iter().enumerate() {
        time[x] = t;
    }
    for k in 0..q {
        let (a, b) = (ordering[k], ordering[(k + 1) % q]);
        let t = (time[b] + q - time[a]) % q;
        if t % 2 == 1 {
            let perm = CellPermutation::transposition(q, a, b).compose(sigma);
            return Ok(Bicyclization { perm, pair: (a, b), lengths: (t, q - t) });
        }
    }
    // if every step were even, all cells would share the parity of their
    // time along the cycle, but the times 0..q cover both parities
    unreachable!("no odd transition found in an even cycle")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn permutations(q: usize) -> Vec<Vec<usize>> {
        if q == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(q - 1) {
            for slot in 0..q {
                let mut v = p.clone();
                v.insert(slot, q - 1);
                out.push(v);
            }
        }
        out
    }

    #[test]
    fn identity_on_four() {
        let ord: Vec<usize> = (0..4).collect();
        let (tau, merged) = cyclicize(&CellPermutation::identity(4), &ord).unwrap();
        assert!(merged.is_cyclic());
        assert!(cyclic_displacement(&tau, &ord).unwrap() <= 2);
    }

    #[test]
    fn cyclic_input_is_untouched() {
        let ord: Vec<usize> = (0..6).collect();
        let sigma = CellPermutation::from_cycles(6, &[vec![0, 3, 5, 1, 4, 2]]).unwrap();
        assert!(sigma.is_cyclic());
        let (tau, merged) = cyclicize(&sigma, &ord).unwrap();
        assert_eq!(tau, CellPermutation::identity(6));
        assert_eq!(merged, sigma);
    }

    #[test]
    fn exhaustive_small() {
        for q in 1..=6 {
            let ord: Vec<usize> = (0..q).collect();
            for p in permutations(q) {
                let sigma = CellPermutation::new(p).unwrap();
                let (tau, merged) = cyclicize(&sigma, &ord).unwrap();
                assert!(merged.is_cyclic());
                assert!(cyclic_displacement(&tau, &ord).unwrap() <= 2);
            }
        }
    }

    #[test]
    fn follows_a_shuffled_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for q in 2..=9 {
            for _ in 0..200 {
                let mut ord: Vec<usize> = (0..q).collect();
                ord.shuffle(&mut rng);
                let mut img: Vec<usize> = (0..q).collect();
                img.shuffle(&mut rng);
                let sigma = CellPermutation::new(img).unwrap();
                let (tau, merged) = cyclicize(&sigma, &ord).unwrap();
                assert!(merged.is_cyclic());
                assert!(cyclic_displacement(&tau, &ord).unwrap() <= 2);
            }
        }
    }

    #[test]
    fn bicyclize_four_cycle() {
        let ord = vec![0, 1, 3, 2];
        let sigma = CellPermutation::from_cycles(4, &[ord.clone()]).unwrap();
        let b = bicyclize(&sigma, &ord).unwrap();
        let mut lengths = b.perm.cycle_lengths();
        lengths.sort();
        assert_eq!(lengths, vec![1, 3]);
        assert_eq!(b.pair, (0, 1));
    }

    #[test]
    fn bicyclize_two_cycle() {
        let sigma = CellPermutation::new(vec![1, 0]).unwrap();
        let b = bicyclize(&sigma, &[0, 1]).unwrap();
        assert_eq!(b.perm, CellPermutation::identity(2));
        assert_eq!(b.lengths, (1, 1));
    }

    #[test]
    fn bicyclize_errors() {
        let ord: Vec<usize> = (0..4).collect();
        assert_eq!(bicyclize(&CellPermutation::identity(4), &ord).unwrap_err(), Error::NotCyclic { cycles: 4 });
        let odd = CellPermutation::new(vec![1, 2, 0]).unwrap();
        assert_eq!(bicyclize(&odd, &[0, 1, 2]).unwrap_err(), Error::OddOrder(3));
    }
}
