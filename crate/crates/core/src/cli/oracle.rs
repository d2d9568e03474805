//! Brute-force oracle suites behind `laxgrid oracle <suite>`.
//!
//! Each suite drives the library on a fixed, seeded workload and checks the
//! results with code that does not go through the routine under test: cycle
//! structure is walked from the raw image array, cell arithmetic is redone
//! from multi-indices, existence claims are searched exhaustively.

use std::fmt::Write as _;
use std::time::Instant;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::entropy::{horseshoe_entropy_lower, markov_components, Rect, RectModel};
use crate::entropy::{join, join_entropy, partition_entropy, Dynamics, Partition};
use crate::extension::{chain_breakpoint_margin, jacobian_check, move_points, TwistMap};
use crate::grid::{DyadicGrid, Topology};
use crate::lax::{bicyclize, cyclicize, grid_for, lax_approximate, LaxMode};
use crate::maps::{MeasureMap, Sampling};
use crate::metrics::{delta_sum, delta_sum_iterate, refinement_tolerance};
use crate::perm::CellPermutation;
use crate::spectral::{cesaro_mixing_diagnostic, rigidity_detector, spectral_measure_of_vector, spectral_type};
use crate::towers::{bezout_split, rank_one_base, rokhlin_tower, two_column_partition};

use super::{run, ExperimentConfig};

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub suite: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.seconds < self.budget_seconds
    }

    /// `PASS suite (checks, runtime / budget)` plus failure details.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} {:<12} {:>7} checks  {:>7.3}s / {:.0}s",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite,
            self.checks,
            self.seconds,
            self.budget_seconds
        );
        for n in &self.notes {
            let _ = write!(s, "\n    {n}");
        }
        for f in self.failures.iter().take(10) {
            let _ = write!(s, "\n    failure: {f}");
        }
        if self.failures.len() > 10 {
            let _ = write!(s, "\n    ... {} more", self.failures.len() - 10);
        }
        s
    }
}

#[derive(Default)]
struct Checker {
    checks: usize,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checker {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn fail(&mut self, what: String) {
        self.check(false, || what);
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }
}

/// Suite names with their runtime budgets in seconds.
pub const SUITES: &[(&str, f64)] = &[
    ("cyclicize", 10.0),
    ("bicyclize", 5.0),
    ("lax", 30.0),
    ("iterate", 60.0),
    ("towers", 10.0),
    ("rank_one", 30.0),
    ("entropy", 60.0),
    ("spectral", 30.0),
    ("twist", 30.0),
    ("determinism", 5.0),
];

pub fn run_suite(name: &str) -> Option<SuiteOutcome> {
    let &(suite, budget_seconds) = SUITES.iter().find(|(n, _)| *n == name)?;
    let body: fn(&mut Checker) = match suite {
        "cyclicize" => suite_cyclicize,
        "bicyclize" => suite_bicyclize,
        "lax" => suite_lax,
        "iterate" => suite_iterate,
        "towers" => suite_towers,
        "rank_one" => suite_rank_one,
        "entropy" => suite_entropy,
        "spectral" => suite_spectral,
        "twist" => suite_twist,
        _ => suite_determinism,
    };
    let mut c = Checker::default();
    let start = Instant::now();
    body(&mut c);
    Some(SuiteOutcome {
        suite,
        checks: c.checks,
        failures: c.failures,
        notes: c.notes,
        seconds: start.elapsed().as_secs_f64(),
        budget_seconds,
    })
}

// ---- independent helpers ----

/// Cycle lengths by walking the raw image array.
fn walk_cycles(image: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; image.len()];
    let mut lengths = Vec::new();
    for s in 0..image.len() {
        let mut len = 0;
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            x = image[x];
            len += 1;
        }
        if len > 0 {
            lengths.push(len);
        }
    }
    lengths
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Calls `f` on every permutation of `0..q` (Heap's algorithm).
fn for_each_permutation(q: usize, mut f: impl FnMut(&[usize])) {
    let mut a: Vec<usize> = (0..q).collect();
    let mut c = vec![0usize; q];
    f(&a);
    let mut i = 1;
    while i < q {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn random_perm(rng: &mut ChaCha8Rng, q: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..q).collect();
    v.shuffle(rng);
    v
}

fn random_cycle(rng: &mut ChaCha8Rng, q: usize) -> Vec<usize> {
    let order = random_perm(rng, q);
    let mut image = vec![0; q];
    for k in 0..q {
        image[order[k]] = order[(k + 1) % q];
    }
    image
}

fn perm(image: &[usize]) -> CellPermutation {
    CellPermutation::new(image.to_vec()).expect("oracle builds bijections")
}

/// Largest cyclic position shift of `tau` along `ordering`.
fn position_shift(tau: &[usize], ordering: &[usize]) -> usize {
    let q = ordering.len();
    let mut pos = vec![0; q];
    for (k, &c) in ordering.iter().enumerate() {
        pos[c] = k;
    }
    (0..q)
        .map(|x| {
            let d = (pos[tau[x]] + q - pos[x]) % q;
            d.min(q - d)
        })
        .max()
        .unwrap_or(0)
}

fn multi_index(side: usize, dim: usize, mut idx: usize) -> Vec<usize> {
    (0..dim)
        .map(|_| {
            let k = idx % side;
            idx /= side;
            k
        })
        .collect()
}

fn flat_index(side: usize, k: &[usize]) -> usize {
    k.iter().rev().fold(0, |acc, &x| acc * side + x)
}

/// Cell containing `x`, wrapping on the torus and clamping on the cube.
fn locate(side: usize, torus: bool, x: &[f64]) -> usize {
    let k: Vec<usize> = x
        .iter()
        .map(|&v| {
            let v = if torus { v.rem_euclid(1.0) } else { v };
            ((v * side as f64).floor().max(0.0) as usize).min(side - 1)
        })
        .collect();
    flat_index(side, &k)
}

fn cat() -> MeasureMap {
    MeasureMap::parse("torus_linear:2,1,1,1", 2).expect("catalog map")
}

// ---- suites ----

fn check_cyclicize(c: &mut Checker, sigma: &[usize], ordering: &[usize]) {
    let q = sigma.len();
    let (tau, product) = match cyclicize(&perm(sigma), ordering) {
        Ok(r) => r,
        Err(e) => return c.fail(format!("q={q} {sigma:?}: {e}")),
    };
    let expected: Vec<usize> = (0..q).map(|i| tau.image()[sigma[i]]).collect();
    c.check(product.image() == expected.as_slice(), || format!("product is not tau after sigma for {sigma:?}"));
    c.check(walk_cycles(product.image()).len() == 1, || format!("not one cycle for {sigma:?}"));
    let shift = position_shift(tau.image(), ordering);
    c.check(shift <= 2, || format!("displacement {shift} for {sigma:?}"));
}

fn suite_cyclicize(c: &mut Checker) {
    let mut exhaustive = 0;
    for q in 1..=7 {
        let ordering: Vec<usize> = (0..q).collect();
        for_each_permutation(q, |s| {
            exhaustive += 1;
            check_cyclicize(c, s, &ordering);
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e3);
    for q in 8..=64 {
        for i in 0..500 {
            let sigma = random_perm(&mut rng, q);
            let ordering = if i % 2 == 0 { (0..q).collect() } else { random_perm(&mut rng, q) };
            check_cyclicize(c, &sigma, &ordering);
        }
    }
    c.note(format!("{exhaustive} permutations exhaustively (q <= 7), 500 random per q in 8..=64"));
}

fn suite_bicyclize(c: &mut Checker) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb1c);
    for (dim, order) in [(2, 1), (3, 1), (2, 2), (2, 3)] {
        let grid = DyadicGrid::new(dim, order, Topology::Cube).expect("small grid");
        let snake = grid.snake_order().expect("even side");
        let q = grid.cell_count();
        for _ in 0..200 {
            let sigma = random_cycle(&mut rng, q);
            match bicyclize(&perm(&sigma), &snake) {
                Ok(b) => {
                    let mut lengths = walk_cycles(b.perm.image());
                    lengths.sort();
                    let ok = lengths.len() == 2
                        && lengths.iter().all(|l| l % 2 == 1)
                        && gcd(lengths[0], lengths[1]) == 1
                        && lengths[0] + lengths[1] == q;
                    c.check(ok, || format!("q={q}: lengths {lengths:?}"));
                    let (a, bb) = b.pair;
                    let swapped: Vec<usize> = sigma
                        .iter()
                        .map(|&y| if y == a { bb } else if y == bb { a } else { y })
                        .collect();
                    c.check(b.perm.image() == swapped.as_slice(), || format!("q={q}: not a transposition of sigma"));
                }
                Err(e) => c.fail(format!("q={q}: {e}")),
            }
        }
    }
    c.note("200 random cycles at q = 4, 8, 16, 64 on snake orders".into());
}

fn stratified_hit(map: &MeasureMap, grid: &DyadicGrid, cell: usize, target: usize, s: usize) -> bool {
    let side = grid.side();
    let dim = grid.dim();
    let torus = grid.topology() == Topology::Torus;
    let corner = multi_index(side, dim, cell);
    let h = 1.0 / side as f64;
    (0..s.pow(dim as u32)).any(|j| {
        let sub = multi_index(s, dim, j);
        let x: Vec<f64> = (0..dim).map(|a| (corner[a] as f64 + (sub[a] as f64 + 0.5) / s as f64) * h).collect();
        locate(side, torus, &map.eval_unchecked(&x)) == target
    })
}

fn dyadic_shift(grid: &DyadicGrid, shift: &[f64]) -> Vec<usize> {
    let side = grid.side();
    let steps: Vec<usize> = shift.iter().map(|t| (t * side as f64).round() as usize).collect();
    (0..grid.cell_count())
        .map(|i| {
            let k = multi_index(side, grid.dim(), i);
            let moved: Vec<usize> = k.iter().zip(&steps).map(|(a, b)| (a + b) % side).collect();
            flat_index(side, &moved)
        })
        .collect()
}

fn suite_lax(c: &mut Checker) {
    let s = 8;
    let sampling = Sampling::Stratified(s);
    let translations: [(&str, [f64; 2], u32); 2] = [("translation:0.5,0.5", [0.5, 0.5], 1), ("translation:0.25,0.75", [0.25, 0.75], 2)];
    let mut maps: Vec<(String, MeasureMap)> = vec![
        ("identity".into(), MeasureMap::Identity { dim: 2 }),
        ("cat".into(), cat()),
    ];
    for (spec, _, _) in &translations {
        maps.push((spec.to_string(), MeasureMap::parse(spec, 2).expect("catalog map")));
    }
    let mut worst = 0.0f64;
    for (name, map) in &maps {
        for m in 1..=5 {
            let grid = grid_for(map, m).expect("small grid");
            match lax_approximate(map, &grid, sampling, LaxMode::Plain) {
                Ok((matched, _)) => {
                    let bad = (0..grid.cell_count()).find(|&i| !stratified_hit(map, &grid, i, matched.apply(i), s));
                    c.check(bad.is_none(), || format!("{name} m={m}: cell {bad:?} matched without overlap"));
                }
                Err(e) => c.fail(format!("{name} m={m} plain: {e}")),
            }
            match lax_approximate(map, &grid, sampling, LaxMode::Cyclic) {
                Ok((cyc, cert)) => {
                    let diam = grid.cell_diameter();
                    let limit = 2.0 * diam.max(cert.max_image_diameter) + 2.0 * diam;
                    worst = worst.max(cert.strong_bound / limit);
                    c.check(cert.all_matched_positive(), || format!("{name} m={m}: certificate reports a zero overlap"));
                    c.check(cert.strong_bound <= limit, || format!("{name} m={m}: bound {} > {limit}", cert.strong_bound));
                    c.check(walk_cycles(cyc.image()).len() == 1, || format!("{name} m={m}: cyclic mode is not one cycle"));
                }
                Err(e) => c.fail(format!("{name} m={m} cyclic: {e}")),
            }
        }
    }
    for (spec, shift, from) in translations {
        let map = MeasureMap::parse(spec, 2).expect("catalog map");
        for m in from..=5 {
            let grid = grid_for(&map, m).expect("small grid");
            let exact = dyadic_shift(&grid, &shift);
            match lax_approximate(&map, &grid, sampling, LaxMode::Plain) {
                Ok((p, _)) => {
                    c.check(p.image() == exact.as_slice(), || format!("{spec} m={m}: not the exact cell shift"));
                    let ds = delta_sum(&map, &p, &grid, 3);
                    c.check(matches!(ds, Ok(d) if d == 0.0), || format!("{spec} m={m}: delta_sum {ds:?}"));
                }
                Err(e) => c.fail(format!("{spec} m={m}: {e}")),
            }
        }
    }
    c.note(format!("largest strong_bound / limit: {worst:.4}"));
}

fn suite_iterate(c: &mut Checker) {
    let map = cat();
    let (m, r) = (3, 4);
    let grid = grid_for(&map, m).expect("small grid");
    let fm = match lax_approximate(&map, &grid, Sampling::Stratified(8), LaxMode::Cyclic) {
        Ok((p, _)) => p,
        Err(e) => return c.fail(e.to_string()),
    };
    let tol = refinement_tolerance(&grid, r);
    let base = match delta_sum(&map, &fm, &grid, r) {
        Ok(d) => d,
        Err(e) => return c.fail(e.to_string()),
    };
    let mut row = Vec::new();
    for p in 1..=10 {
        match delta_sum_iterate(&map, &fm, p, &grid, r) {
            Ok(d) => {
                row.push(format!("{d:.3}"));
                let limit = p as f64 * base + tol;
                c.check(d <= limit, || format!("p={p}: {d} > {limit}"));
            }
            Err(e) => c.fail(format!("p={p}: {e}")),
        }
    }
    c.note(format!("delta_sum = {base:.4}, tolerance = {tol}, iterates = [{}]", row.join(", ")));
}

fn check_rokhlin(c: &mut Checker, sigma: &[usize]) {
    let q = sigma.len();
    let lengths = walk_cycles(sigma);
    let shortest = *lengths.iter().min().expect("nonempty");
    let p = perm(sigma);
    for height in 1..=shortest {
        let t = match rokhlin_tower(&p, height) {
            Ok(t) => t,
            Err(e) => return c.fail(format!("{sigma:?} m={height}: {e}")),
        };
        let mut seen = vec![false; q];
        let mut disjoint = true;
        for &b in &t.base {
            let mut x = b;
            for _ in 0..height {
                disjoint &= !std::mem::replace(&mut seen[x], true);
                x = sigma[x];
            }
        }
        let covered = seen.iter().filter(|&&s| s).count();
        let floor = 1.0 - ((height - 1) * lengths.len()) as f64 / q as f64;
        c.check(disjoint, || format!("{sigma:?} m={height}: levels overlap"));
        c.check(covered as f64 / q as f64 >= floor - 1e-15, || format!("{sigma:?} m={height}: coverage {covered}/{q}"));
        c.check((t.coverage - covered as f64 / q as f64).abs() < 1e-15, || format!("{sigma:?}: reported coverage"));
    }
    if shortest < q {
        c.check(rokhlin_tower(&p, shortest + 1).is_err(), || format!("{sigma:?}: accepted a too-tall tower"));
    }
}

fn check_two_column(c: &mut Checker, sigma: &[usize], p: usize, q2: usize) {
    let q = sigma.len();
    let lengths = walk_cycles(sigma);
    let applicable = lengths.iter().all(|&l| l >= p * q2);
    match two_column_partition(&perm(sigma), p, q2, false) {
        Ok(t) => {
            c.check(applicable, || format!("({p},{q2}) accepted cycles {lengths:?}"));
            let mut hits = vec![0u32; q];
            for (bases, h) in [(&t.t1, p), (&t.t2, q2)] {
                for &b in bases {
                    let mut x = b;
                    for _ in 0..h {
                        hits[x] += 1;
                        x = sigma[x];
                    }
                }
            }
            c.check(hits.iter().all(|&h| h == 1), || format!("({p},{q2}) on {lengths:?}: not an exact cover"));
        }
        Err(e) => c.check(!applicable && e.name() == "CycleTooShort", || format!("({p},{q2}) on {lengths:?}: {e}")),
    }
}

fn suite_towers(c: &mut Checker) {
    let mut covers = 0;
    for q in 1..=8 {
        for_each_permutation(q, |s| {
            check_rokhlin(c, s);
            check_two_column(c, s, 2, 3);
            check_two_column(c, s, 3, 5);
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x70e);
    for q in 9..=12 {
        for _ in 0..3000 {
            let s = random_perm(&mut rng, q);
            check_rokhlin(c, &s);
            check_two_column(c, &s, 2, 3);
            check_two_column(c, &s, 3, 5);
        }
    }
    // lengths >= 15 never occur below q = 13, so exercise covers on longer cycles
    for (p, q2) in [(2, 3), (3, 5), (3, 7)] {
        for q in (p * q2)..=64 {
            for _ in 0..4 {
                check_two_column(c, &random_cycle(&mut rng, q), p, q2);
                covers += 1;
            }
            if q >= 2 * p * q2 {
                // two cycles, both long enough
                let split = rng.random_range(p * q2..=q - p * q2);
                let order = random_perm(&mut rng, q);
                let mut image = vec![0; q];
                for (lo, hi) in [(0, split), (split, q)] {
                    for k in lo..hi {
                        image[order[k]] = order[if k + 1 == hi { lo } else { k + 1 }];
                    }
                }
                check_two_column(c, &image, p, q2);
                covers += 1;
            }
        }
    }
    let mut triples = 0;
    while triples < 10_000 {
        let p = rng.random_range(1..=12usize);
        let q2 = rng.random_range(1..=12usize);
        if gcd(p, q2) != 1 {
            continue;
        }
        let k = rng.random_range(p * q2..=p * q2 + 200);
        triples += 1;
        let brute = (0..q2).find(|&a| a * p <= k && (k - a * p) % q2 == 0).map(|a| (a, (k - a * p) / q2));
        let got = bezout_split(k, p, q2).ok();
        c.check(brute.is_some() && got == brute, || format!("bezout({k},{p},{q2}) = {got:?}, search {brute:?}"));
    }
    c.check(bezout_split(5, 2, 3).is_err() && bezout_split(12, 2, 4).is_err(), || "bezout preconditions".into());
    c.note(format!("exhaustive q <= 8, 3000 random per q in 9..=12, {covers} long-cycle covers, {triples} Bezout triples"));
}

fn suite_rank_one(c: &mut Checker) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0e1);
    for (dim, m, refine) in [(2, 2, 3), (2, 3, 2), (1, 4, 4)] {
        let grid = DyadicGrid::new(dim, m, Topology::Torus).expect("small grid");
        let q = grid.cell_count();
        let mut fms = vec![grid.traversal_order()];
        fms.extend((0..3).map(|_| random_perm(&mut rng, q)));
        for order in fms {
            let mut image = vec![0; q];
            for k in 0..q {
                image[order[k]] = order[(k + 1) % q];
            }
            let fm = perm(&image);
            let f = MeasureMap::Dyadic { grid, perm: fm.clone() };
            match rank_one_base(&f, &fm, &grid, refine) {
                Ok(cert) => {
                    let (k, n) = cert.base_measure;
                    c.check(Ratio::new(k, n) == Ratio::new(1, q as u64), || format!("n={dim} m={m}: mu(A) = {k}/{n}"));
                    c.check(cert.deficit == 0.0 && cert.disjointness_ok, || format!("n={dim} m={m}: deficit {}", cert.deficit));
                }
                Err(e) => c.fail(format!("exact n={dim} m={m}: {e}")),
            }
        }
    }
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let round = |x: f64| (x.fract() * 256.0).round() / 256.0;
    let (a, b) = (round(golden), round(golden * golden));
    let map = MeasureMap::parse(&format!("translation:{a},{b}"), 2).expect("catalog map");
    let (m, r) = (2, 6);
    let grid = grid_for(&map, m).expect("small grid");
    let outcome = lax_approximate(&map, &grid, Sampling::Stratified(8), LaxMode::Cyclic).and_then(|(fm, _)| {
        let ds = delta_sum(&map, &fm, &grid, r)?;
        Ok((ds, rank_one_base(&map, &fm, &grid, r)?))
    });
    match outcome {
        Ok((ds, cert)) => {
            let eps = refinement_tolerance(&grid, r);
            c.check(cert.deficit <= ds / 2.0 + eps, || format!("golden: deficit {} > {ds}/2 + {eps}", cert.deficit));
            c.note(format!("golden ({a}, {b}): deficit {:.5}, delta_sum {ds:.5}, eps(r) {eps}", cert.deficit));
        }
        Err(e) => c.fail(format!("golden: {e}")),
    }
}

fn plogp_entropy(labels: &[u64]) -> f64 {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    let n = labels.len() as f64;
    sorted
        .chunk_by(|a, b| a == b)
        .map(|run| {
            let p = run.len() as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn suite_entropy(c: &mut Checker) {
    for dim in 1..=2 {
        for m in 0..=4 {
            let grid = DyadicGrid::new(dim, m, Topology::Torus).expect("small grid");
            let part = Partition::cells(&grid, 2).expect("small partition");
            let q = grid.cell_count() as f64;
            let h = partition_entropy(&part);
            c.check((h - q.ln()).abs() <= 1e-12, || format!("n={dim} m={m}: H = {h}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xe27);
    let base = DyadicGrid::new(2, 0, Topology::Torus).expect("trivial grid");
    for _ in 0..100 {
        let mut labels = || {
            let k = rng.random_range(1..=6u32);
            (0..256).map(|_| rng.random_range(0..k)).collect::<Vec<u32>>()
        };
        let (la, lb) = (labels(), labels());
        let a = Partition::from_labels(&base, 4, la.clone()).expect("labels");
        let b = Partition::from_labels(&base, 4, lb.clone()).expect("labels");
        let joint = join(&a, &b).expect("same grid");
        let (ha, hb, hj) = (partition_entropy(&a), partition_entropy(&b), partition_entropy(&joint));
        let pairs: Vec<u64> = la.iter().zip(&lb).map(|(&x, &y)| ((x as u64) << 32) | y as u64).collect();
        c.check((hj - plogp_entropy(&pairs)).abs() < 1e-12, || format!("join entropy {hj}"));
        c.check(hj <= ha + hb + 1e-12, || format!("subadditivity {hj} > {ha} + {hb}"));
    }
    for m in 1..=3 {
        let grid = DyadicGrid::new(2, m, Topology::Torus).expect("small grid");
        let q = grid.cell_count();
        let part = Partition::cells(&grid, 1).expect("small partition");
        for _ in 0..3 {
            let sigma = perm(&random_perm(&mut rng, q));
            for l in 1..=5 {
                let h = join_entropy(Dynamics::Permutation(&sigma, &grid), &part, l).map(|h| h / l as f64);
                let expected = (q as f64).ln() / l as f64;
                c.check(matches!(h, Ok(v) if (v - expected).abs() <= 1e-12), || format!("q={q} l={l}: {h:?}"));
            }
        }
    }
    for k in 2..=4usize {
        let model = RectModel::baker_horseshoe(k);
        let h = horseshoe_entropy_lower(&model, &Rect::unit(), 10, 0.05);
        c.check(matches!(h, Ok(v) if v >= (k as f64).ln() - 1e-9), || format!("k={k}: {h:?}"));
        let one = markov_components(&model, &Rect::unit(), &Rect::unit());
        c.check(one == k, || format!("k={k}: {one} one-step components"));
        for l in 1..=4 {
            let count = markov_components(&model.power(l), &Rect::unit(), &Rect::unit());
            c.check(count >= one.pow(l as u32), || format!("k={k} l={l}: {count} < {}", one.pow(l as u32)));
        }
    }
}

fn lcm_of(lengths: &[usize]) -> u128 {
    lengths.iter().fold(1u128, |acc, &l| acc / gcd_u128(acc, l as u128) * l as u128)
}

fn gcd_u128(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd_u128(b, a % b)
    }
}

fn check_cesaro(c: &mut Checker, rng: &mut ChaCha8Rng, sigma: &[usize]) {
    let q = sigma.len();
    let p = perm(sigma);
    for _ in 0..50 {
        let e1: Vec<usize> = (0..q).filter(|_| rng.random_bool(0.5)).collect();
        let e2: Vec<usize> = (0..q).filter(|_| rng.random_bool(0.5)).collect();
        let mut inside = vec![false; q];
        e1.iter().for_each(|&x| inside[x] = true);
        let mut target = vec![false; q];
        e2.iter().for_each(|&x| target[x] = true);
        // Σ_i |σ^i E1 ∩ E2| by moving each point of E1 along its orbit
        let mut total = 0i128;
        for &x in &e1 {
            let mut y = x;
            for _ in 0..q {
                total += target[y] as i128;
                y = sigma[y];
            }
        }
        let by_hand = Ratio::new(total, (q * q) as i128);
        let identity = Ratio::new((e1.len() * e2.len()) as i128, (q * q) as i128);
        match cesaro_mixing_diagnostic(&p, &e1, &e2, q) {
            Ok(d) => {
                c.check(d.unsigned_average.0 == by_hand, || format!("q={q}: average differs from enumeration"));
                c.check(d.unsigned_average.0 == identity, || format!("q={q}: identity fails"));
            }
            Err(e) => c.fail(format!("q={q}: {e}")),
        }
    }
}

fn suite_spectral(c: &mut Checker) {
    use num_complex::Complex64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5bec);
    for _ in 0..100 {
        let q = rng.random_range(1..=64);
        let sigma = perm(&random_perm(&mut rng, q));
        let v: Vec<Complex64> = (0..q).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        match spectral_measure_of_vector(&sigma, &v) {
            Ok(m) => c.check((m.total_mass() - norm).abs() <= 1e-12 * norm.max(1.0), || format!("q={q}: mass {} vs {norm}", m.total_mass())),
            Err(e) => c.fail(e.to_string()),
        }
        let t = spectral_type(&sigma).total_mass();
        c.check((t - 1.0).abs() <= 1e-12, || format!("q={q}: spectral type mass {t}"));
    }
    let mut cyclic_count = 0;
    for q in 1..=6 {
        // every cyclic σ: fix 0 first, permute the rest
        for_each_permutation(q - 1, |rest| {
            let order: Vec<usize> = std::iter::once(0).chain(rest.iter().map(|&x| x + 1)).collect();
            let mut image = vec![0; q];
            for k in 0..q {
                image[order[k]] = order[(k + 1) % q];
            }
            cyclic_count += 1;
            check_cesaro(c, &mut rng, &image);
        });
    }
    for q in 7..=32 {
        for _ in 0..10 {
            let sigma = random_cycle(&mut rng, q);
            cyclic_count += 1;
            check_cesaro(c, &mut rng, &sigma);
        }
    }
    for _ in 0..100 {
        let q = rng.random_range(1..=64);
        let sigma = random_perm(&mut rng, q);
        let lcm = lcm_of(&walk_cycles(&sigma));
        let r = rigidity_detector(&perm(&sigma), None);
        c.check(r.period.to_string() == lcm.to_string(), || format!("period {} vs {lcm}", r.period));
        c.check(r.weak_distance == 0.0, || format!("d_weak {}", r.weak_distance));
    }
    let grid = DyadicGrid::new(2, 3, Topology::Torus).expect("small grid");
    let g = perm(&random_perm(&mut rng, 64));
    c.check(rigidity_detector(&g, Some(&grid)).weak_distance == 0.0, || "rigidity on the grid metric".into());
    c.note(format!("Cesaro identity: all cyclic permutations for q <= 6, 10 random cycles per q in 7..=32, {cyclic_count} in total, 50 set pairs each"));
}

fn suite_twist(c: &mut Checker) {
    let unit = TwistMap::unit();
    let out = unit.eval([0.25, 0.0]);
    c.check((out[0] + 0.25).abs() <= 1e-12 && out[1].abs() <= 1e-12, || format!("unit twist sends e^0/4 to {out:?}"));
    let mut rng = ChaCha8Rng::seed_from_u64(0x7157);
    for _ in 0..10_000 {
        let r = rng.random_range(0.5..1.5);
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        let p = [r * t.cos(), r * t.sin()];
        c.check(unit.eval(p) == p, || format!("{p:?} moved outside the support"));
    }
    let cases: Vec<(Vec<([f64; 2], [f64; 2])>, f64)> = vec![
        (vec![([0.3, 0.3], [0.35, 0.32])], 0.1),
        (vec![([0.2, 0.2], [0.25, 0.22]), ([0.8, 0.8], [0.76, 0.83])], 0.1),
        (vec![([0.5, 0.5], [0.55, 0.5]), ([0.2, 0.7], [0.2, 0.75]), ([0.7, 0.2], [0.66, 0.24])], 0.1),
        (vec![([0.125, 0.125], [0.375, 0.125]), ([0.625, 0.625], [0.625, 0.875])], 0.4),
    ];
    let swap = move_points(&[([0.5, 0.5], [0.55, 0.5]), ([0.55, 0.5], [0.5, 0.5])], 0.1);
    c.check(matches!(&swap, Err(e) if e.name() == "PathsIntersect"), || format!("overlapping paths: {swap:?}"));
    let mut worst_jac = 0.0f64;
    for (pairs, delta) in cases {
        let map = match move_points(&pairs, delta) {
            Ok(m) => m,
            Err(e) => {
                c.fail(format!("{pairs:?}: {e}"));
                continue;
            }
        };
        for (from, to) in &pairs {
            let y = map.eval_unchecked(from);
            c.check((y[0] - to[0]).abs() <= 1e-9 && (y[1] - to[1]).abs() <= 1e-9, || format!("{from:?} -> {y:?}, wanted {to:?}"));
        }
        let mut sup = 0.0f64;
        for _ in 0..10_000 {
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            let y = map.eval_unchecked(&p);
            sup = sup.max(((y[0] - p[0]).powi(2) + (y[1] - p[1]).powi(2)).sqrt());
        }
        c.check(sup < delta, || format!("sup displacement {sup} >= {delta}"));
        let mut points = Vec::new();
        while points.len() < 1000 {
            let p = vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            if chain_breakpoint_margin(&map, &p) > 1e-3 {
                points.push(p);
            }
        }
        let j = jacobian_check(&map, &points);
        worst_jac = worst_jac.max(j);
        c.check(j <= 1e-4, || format!("Jacobian deviation {j}"));
    }
    c.note(format!("largest |det J - 1| on 10^3 points per map: {worst_jac:.2e}"));
}

fn suite_determinism(c: &mut Checker) {
    let text = "map = \"torus_linear:2,1,1,1\"\norders = [1, 2, 3]\nmode = \"bicyclic\"\n\
                analyses = [\"speed\", \"towers\", \"entropy\", \"spectral\", \"cesaro\"]\nentropy_length = 2\nseed = 7\n";
    let cfg = match ExperimentConfig::from_toml_str(text) {
        Ok(c) => c,
        Err(e) => return c.fail(e.to_string()),
    };
    let first = run(&cfg).and_then(|r| r.to_json_without_timing());
    let second = run(&cfg).and_then(|r| r.to_json_without_timing());
    match (first, second) {
        (Ok(a), Ok(b)) => {
            c.check(a == b, || "reports differ".into());
            c.note(format!("{} bytes compared", a.len()));
        }
        (Err(e), _) | (_, Err(e)) => c.fail(e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helpers() {
        assert_eq!(walk_cycles(&[1, 0, 2, 4, 3]), vec![2, 1, 2]);
        let mut n = 0;
        for_each_permutation(5, |_| n += 1);
        assert_eq!(n, 120);
        assert_eq!(position_shift(&[1, 0, 2, 3], &[0, 1, 2, 3]), 1);
        assert_eq!(lcm_of(&[4, 6, 5]), 60);
        assert!(run_suite("nonsense").is_none());
    }

    #[test]
    fn quick_suites_pass() {
        for name in ["bicyclize", "determinism"] {
            let o = run_suite(name).unwrap();
            assert!(o.failures.is_empty(), "{}", o.summary());
        }
    }
}
