use laxgrid::extension::{jacobian_check, move_points};
use laxgrid::lax::{lax_approximate, LaxMode};
use laxgrid::{DyadicGrid, Sampling, Topology};

#[test]
fn opposite_quadrant_pairs() {
    let pairs = [([0.2, 0.2], [0.23, 0.21]), ([0.8, 0.8], [0.78, 0.77])];
    let f = move_points(&pairs, 0.1).unwrap();
    for (a, b) in pairs {
        let y = f.eval(&a).unwrap();
        assert!((y[0] - b[0]).abs() < 1e-9 && (y[1] - b[1]).abs() < 1e-9);
    }
    let probes: Vec<Vec<f64>> = (0..1000).map(|i| vec![(i % 40) as f64 / 40.0 + 0.0123, (i / 40) as f64 / 25.0 + 0.0071]).collect();
    assert!(jacobian_check(&f, &probes) < 1e-4);
}

/// Moving grid centers along a cyclic permutation with a twist map, then
/// approximating that map again.
#[test]
fn moved_centers_feed_the_pipeline() {
    let grid = DyadicGrid::new(2, 2, Topology::Cube).unwrap();
    let snake = grid.snake_order().unwrap();
    // nudge every other center a short way toward its successor
    let pairs: Vec<([f64; 2], [f64; 2])> = snake
        .iter()
        .step_by(4)
        .map(|&c| {
            let p = grid.center(c);
            let n = grid.center(snake[(snake.iter().position(|&x| x == c).unwrap() + 1) % snake.len()]);
            let t = 0.1;
            ([p[0], p[1]], [p[0] + t * (n[0] - p[0]), p[1] + t * (n[1] - p[1])])
        })
        .collect();
    let f = move_points(&pairs, 0.05).unwrap();
    for (a, b) in &pairs {
        let y = f.eval(a).unwrap();
        assert!((y[0] - b[0]).abs() < 1e-9 && (y[1] - b[1]).abs() < 1e-9);
    }
    let (perm, cert) = lax_approximate(&f, &grid, Sampling::Stratified(8), LaxMode::Cyclic).unwrap();
    assert!(perm.is_cyclic());
    assert!(cert.all_matched_positive());
}
