//! One line per acceptance criterion. Each runs an oracle suite and must
//! finish inside its time budget. Runs without the libtest harness so the
//! report is printed on every `cargo test`.

use laxgrid::cli::oracle::run_suite;

const CRITERIA: &[(u32, &str, &str)] = &[
    (1, "cyclicize", "cyclicization: single cycle, displacement <= 2"),
    (2, "bicyclize", "bicyclization: two odd coprime cycles"),
    (3, "lax", "lax bound and exact dyadic translations"),
    (4, "iterate", "iterate inequality for the cat map"),
    (5, "towers", "Rokhlin and two-column towers, Bezout split"),
    (6, "rank_one", "rank-one base deficit"),
    (7, "entropy", "entropy identities and horseshoe bounds"),
    (8, "spectral", "spectral mass, Cesaro identity, rigidity"),
    (9, "twist", "twist maps and point moving"),
    (10, "determinism", "byte-identical reports modulo timing"),
];

fn main() {
    let mut failed = Vec::new();
    for &(n, suite, what) in CRITERIA {
        let outcome = run_suite(suite).expect("suite is registered");
        println!("[{n:>2}] {what}\n     {}", outcome.summary().replace('\n', "\n     "));
        if !outcome.passed() {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        eprintln!("criteria failed: {failed:?}");
        std::process::exit(1);
    }
}
