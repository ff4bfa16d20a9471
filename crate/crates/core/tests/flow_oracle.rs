mod common;

use common::{dense_steady_solve, stencil_residual};
use gvflow::field::{CellMask, HeadField};
use gvflow::flow::{flow_iterate, flow_residual, Coupling, FlowParams, IterateOptions, Source};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn with_random_boundary(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> HeadField {
    let mut h = HeadField::filled(rows, cols, 0.0).unwrap();
    for i in 0..rows {
        for j in 0..cols {
            if h.is_boundary(i, j) {
                h.set(i, j, rng.gen_range(0.0..100.0));
            }
        }
    }
    h
}

#[test]
fn residual_matches_longhand_stencil() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let prev: Vec<f64> = (0..36).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let curr: Vec<f64> = (0..36).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let alpha = rng.gen_range(0.0..3.0);
        let g = rng.gen_range(-1.0..1.0);
        let p = FlowParams::new(alpha, Source::Uniform(g), 1.0).unwrap();
        let h1 = HeadField::new(6, 6, prev.clone()).unwrap();
        let h2 = HeadField::new(6, 6, curr.clone()).unwrap();
        let r = flow_residual(&h1, &h2, &p).unwrap();
        let want = stencil_residual(&prev, &curr, 6, 6, alpha, g);
        for (a, b) in r.values().iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn dense_oracle_examples() {
    let c = HeadField::filled(7, 5, 3.25).unwrap();
    let fixed = CellMask::boundary(7, 5);
    assert!(dense_steady_solve(&c, &fixed, 1.0, |_, _| 0.0).max_abs_diff(&c) < 1e-13);

    let plane = |i: usize, j: usize| 4.0 - 0.75 * i as f64 + 2.5 * j as f64;
    let exact = HeadField::from_fn(7, 5, plane).unwrap();
    let mut start = exact.clone();
    for i in 1..6 {
        for j in 1..4 {
            start.set(i, j, 0.0);
        }
    }
    assert!(dense_steady_solve(&start, &fixed, 0.5, |_, _| 0.0).max_abs_diff(&exact) < 1e-12);
}

#[test]
fn steady_iteration_matches_dense_solve_up_to_16() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (rows, cols) in [(3, 3), (5, 8), (10, 10), (16, 16), (16, 7)] {
        let start = with_random_boundary(rows, cols, &mut rng);
        let fixed = CellMask::boundary(rows, cols);
        let alpha = rng.gen_range(0.5..2.0);
        let sink = HeadField::from_fn(rows, cols, |i, j| if (i + j) % 5 == 0 { 0.3 } else { 0.0 }).unwrap();
        let p = FlowParams::new(alpha, Source::Field(sink.clone()), 1.0).unwrap();
        let opts = IterateOptions { tolerance: 1e-11, max_iter: 200_000, clamp: None };
        let s = flow_iterate(Coupling::Steady, &start, &p, &fixed, &opts).unwrap();
        assert!(s.residual < 1e-11);
        let oracle = dense_steady_solve(&start, &fixed, alpha, |i, j| sink.get(i, j));
        let err = s.field.max_abs_diff(&oracle);
        assert!(err <= 1e-8, "{rows}x{cols}: {err}");
    }
}

#[test]
fn transient_step_zeroes_residual_and_holds_sample_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let prev = HeadField::from_fn(9, 9, |_, _| rng.gen_range(0.0..10.0)).unwrap();
    let mut fixed = CellMask::boundary(9, 9);
    fixed.set(4, 4, true);
    let mut init = prev.clone();
    init.set(4, 4, -2.0);
    let p = FlowParams::new(0.8, Source::Uniform(0.05), 1.0).unwrap();
    let opts = IterateOptions { tolerance: 1e-12, ..Default::default() };
    let s = flow_iterate(Coupling::Transient(&prev), &init, &p, &fixed, &opts).unwrap();
    assert_eq!(s.field.get(4, 4), -2.0);
    let r = flow_residual(&prev, &s.field, &p).unwrap();
    for i in 1..8 {
        for j in 1..8 {
            if (i, j) != (4, 4) {
                assert!(r.get(i, j).abs() < 1e-12);
            }
        }
    }
}
