//! Perfect matchings on the positive-overlap relation.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};
use crate::maps::OverlapMatrix;
use crate::perm::CellPermutation;

const NONE: usize = usize::MAX;

/// Size of a maximum matching of the bipartite graph `adj` (Hopcroft–Karp).
pub fn maximum_matching_size(adj: &[Vec<usize>], cols: usize) -> usize {
    let rows = adj.len();
    let mut row_match = vec![NONE; rows];
    let mut col_match = vec![NONE; cols];
    let mut dist = vec![0usize; rows];
    let mut size = 0;
    loop {
        // BFS layering from free rows
        let mut queue = VecDeque::new();
        for r in 0..rows {
            if row_match[r] == NONE {
                dist[r] = 0;
                queue.push_back(r);
            } else {
                dist[r] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(r) = queue.pop_front() {
            for &c in &adj[r] {
                let next = col_match[c];
                if next == NONE {
                    found = true;
                } else if dist[next] == usize::MAX {
                    dist[next] = dist[r] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            return size;
        }
        for r in 0..rows {
            if row_match[r] == NONE && augment(r, adj, &mut row_match, &mut col_match, &mut dist) {
                size += 1;
            }
        }
    }
}

fn augment(r: usize, adj: &[Vec<usize>], row_match: &mut [usize], col_match: &mut [usize], dist: &mut [usize]) -> bool {
    // iterative DFS along the BFS layers
    let mut stack: Vec<(usize, usize)> = vec![(r, 0)];
    let mut path_cols: Vec<usize> = Vec::new();
    while let Some(&mut (row, ref mut next)) = stack.last_mut() {
        if *next == adj[row].len() {
            dist[row] = usize::MAX;
            stack.pop();
            path_cols.pop();
            continue;
        }
        let c = adj[row][*next];
        *next += 1;
        let owner = col_match[c];
        if owner == NONE {
            path_cols.push(c);
            for (&(row, _), &col) in stack.iter().zip(&path_cols) {
                row_match[row] = col;
                col_match[col] = row;
            }
            return true;
        }
        if dist[owner] == dist[row].wrapping_add(1) {
            path_cols.push(c);
            stack.push((owner, 0));
        }
    }
    false
}

/// Min-cost perfect assignment by successive shortest paths with integer
/// potentials. Returns `(row_match, u, v)` with reduced costs
/// `c_ij - u_i - v_j >= 0` on every edge and `= 0` on matched edges.
fn min_cost_assignment(adj: &[Vec<(usize, i64)>]) -> Option<(Vec<usize>, Vec<i64>, Vec<i64>)> {
    let q = adj.len();
    let mut u = vec![0i64; q];
    let mut v = vec![0i64; q];
    let mut row_match = vec![NONE; q];
    let mut col_match = vec![NONE; q];
    let mut dist = vec![i64::MAX; q];
    let mut prev = vec![NONE; q];
    let mut done = vec![false; q];
    for s in 0..q {
        dist.iter_mut().for_each(|d| *d = i64::MAX);
        done.iter_mut().for_each(|d| *d = false);
        let mut heap = BinaryHeap::new();
        let mut finalized = Vec::new();
        for &(j, c) in &adj[s] {
            let r = c - u[s] - v[j];
            if r < dist[j] {
                dist[j] = r;
                prev[j] = s;
                heap.push(Reverse((r, j)));
            }
        }
        let sink = loop {
            let Reverse((d, j)) = heap.pop()?;
            if done[j] || d > dist[j] {
                continue;
            }
            done[j] = true;
            finalized.push(j);
            let i = col_match[j];
            if i == NONE {
                break j;
            }
            for &(k, c) in &adj[i] {
                if done[k] {
                    continue;
                }
                let nd = d + c - u[i] - v[k];
                if nd < dist[k] {
                    dist[k] = nd;
                    prev[k] = i;
                    heap.push(Reverse((nd, k)));
                }
            }
        };
        let total = dist[sink];
        u[s] += total;
        for &j in &finalized {
            if j != sink {
                let slack = total - dist[j];
                u[col_match[j]] += slack;
                v[j] -= slack;
            }
        }
        let mut j = sink;
        loop {
            let i = prev[j];
            let next = row_match[i];
            row_match[i] = j;
            col_match[j] = i;
            if i == s {
                break;
            }
            j = next;
        }
    }
    Some((row_match, u, v))
}

/// Among perfect matchings of the tight graph, moves to the one whose image
/// sequence is lexicographically smallest. `tight[i]` must be sorted.
fn lexicographic_normalize(tight: &[Vec<usize>], row_match: &mut [usize]) {
    let q = tight.len();
    let mut col_match = vec![NONE; q];
    for (i, &j) in row_match.iter().enumerate() {
        col_match[j] = i;
    }
    let mut parent = vec![(NONE, NONE); q];
    let mut seen = vec![usize::MAX; q];
    for i in 0..q {
        let target = row_match[i];
        for &j in &tight[i] {
            if j == target {
                break;
            }
            let start = col_match[j];
            if start < i {
                continue;
            }
            // search an alternating path from `start` to the column `i`
            // currently holds, through unfixed rows, avoiding column j
            let mut queue = VecDeque::from([start]);
            seen[start] = i * q + j;
            let mut end = NONE;
            'bfs: while let Some(x) = queue.pop_front() {
                for &k in &tight[x] {
                    if k == j {
                        continue;
                    }
                    if k == target {
                        end = x;
                        break 'bfs;
                    }
                    let owner = col_match[k];
                    if owner > i && seen[owner] != i * q + j {
                        seen[owner] = i * q + j;
                        parent[owner] = (x, k);
                        queue.push_back(owner);
                    }
                }
            }
            if end == NONE {
                continue;
            }
            let mut x = end;
            let mut take = target;
            loop {
                row_match[x] = take;
                col_match[take] = x;
                if x == start {
                    break;
                }
                let (p, col) = parent[x];
                take = col;
                x = p;
            }
            row_match[i] = j;
            col_match[j] = i;
            break;
        }
    }
}

/// A perfect matching supported on positive overlaps with maximum total
/// weight; among the optimal ones, the lexicographically smallest image
/// sequence `(σ(0), σ(1), ...)`.
pub fn hall_matching(weights: &OverlapMatrix) -> Result<CellPermutation> {
    let q = weights.size();
    let support: Vec<Vec<usize>> = (0..q).map(|i| weights.row(i).iter().map(|&(j, _)| j).collect()).collect();
    let matched = maximum_matching_size(&support, q);
    if matched < q {
        return Err(Error::NoPerfectMatching { matched, size: q });
    }
    let top = (0..q).flat_map(|i| weights.row(i).iter().map(|&(_, c)| c)).max().unwrap_or(0) as i64;
    let costs: Vec<Vec<(usize, i64)>> = (0..q)
        .map(|i| weights.row(i).iter().map(|&(j, c)| (j, top - c as i64)).collect())
        .collect();
    let (mut row_match, u, v) =
        min_cost_assignment(&costs).ok_or(Error::NoPerfectMatching { matched, size: q })?;
    let tight: Vec<Vec<usize>> = costs
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().filter(|&&(j, c)| c - u[i] - v[j] == 0).map(|&(j, _)| j).collect())
        .collect();
    lexicographic_normalize(&tight, &mut row_match);
    CellPermutation::new(row_match)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_permutations(q: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut p: Vec<usize> = (0..q).collect();
        fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == p.len() {
                out.push(p.clone());
                return;
            }
            for i in k..p.len() {
                p.swap(k, i);
                rec(k + 1, p, out);
                p.swap(k, i);
            }
        }
        rec(0, &mut p, &mut out);
        out.sort();
        out
    }

    /// Exhaustive oracle: best total weight, then smallest image sequence.
    fn brute_force(counts: &[Vec<u64>]) -> Option<Vec<usize>> {
        let q = counts.len();
        let mut best: Option<(u64, Vec<usize>)> = None;
        for p in all_permutations(q) {
            if (0..q).any(|i| counts[i][p[i]] == 0) {
                continue;
            }
            let w: u64 = (0..q).map(|i| counts[i][p[i]]).sum();
            if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
                best = Some((w, p));
            }
        }
        best.map(|(_, p)| p)
    }

    #[test]
    fn identity_matrix() {
        let counts: Vec<Vec<u64>> = (0..5).map(|i| (0..5).map(|j| (i == j) as u64).collect()).collect();
        let w = OverlapMatrix::from_counts(&counts).unwrap();
        assert_eq!(hall_matching(&w).unwrap(), CellPermutation::identity(5));
    }

    #[test]
    fn all_equal_ties_break_to_identity() {
        let w = OverlapMatrix::from_counts(&vec![vec![1; 3]; 3]).unwrap();
        assert_eq!(hall_matching(&w).unwrap(), CellPermutation::identity(3));
    }

    #[test]
    fn hall_violation() {
        let counts = vec![vec![1, 0, 0], vec![1, 0, 0], vec![1, 1, 1]];
        let w = OverlapMatrix::from_counts(&counts).unwrap();
        assert_eq!(hall_matching(&w).unwrap_err(), Error::NoPerfectMatching { matched: 2, size: 3 });
    }

    #[test]
    fn hopcroft_karp_sizes() {
        let adj = vec![vec![0], vec![0], vec![0, 1, 2]];
        assert_eq!(maximum_matching_size(&adj, 3), 2);
        let adj = vec![vec![0, 1], vec![0], vec![1, 2]];
        assert_eq!(maximum_matching_size(&adj, 3), 3);
    }

    proptest! {
        #[test]
        fn agrees_with_brute_force(q in 1usize..7, raw in proptest::collection::vec(0u64..4, 36)) {
            let counts: Vec<Vec<u64>> = (0..q).map(|i| (0..q).map(|j| raw[i * 6 + j]).collect()).collect();
            let w = OverlapMatrix::from_counts(&counts).unwrap();
            match (hall_matching(&w), brute_force(&counts)) {
                (Ok(p), Some(best)) => prop_assert_eq!(p.image(), &best[..]),
                (Err(Error::NoPerfectMatching { .. }), None) => {}
                (got, want) => prop_assert!(false, "got {:?}, want {:?}", got, want),
            }
        }
    }
}
