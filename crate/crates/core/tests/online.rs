//! Window-size behavior of the streaming estimator on synthetic drift.

use std::time::Instant;

use weaklabel::online::{best_window, run_stream, sweep_window, DriftSpec, RollingState, SweepPoint, Window};
use weaklabel::oracle::{StarModel, StarSource};
use weaklabel::{ClassPrior, DependencyGraph, LabelModel};

const SEEDS: [u64; 2] = [11, 12];

fn spec(period: Option<usize>) -> DriftSpec {
    let sources = [0.85, 0.8, 0.75, 0.7, 0.7].iter().map(|&c| StarSource { abstain: 0.1, correct: c }).collect();
    DriftSpec { base: StarModel::new(0.5, sources).unwrap(), flipped: vec![3, 4], period }
}

fn sweep(period: Option<usize>, windows: &[usize], steps: usize) -> Vec<SweepPoint> {
    let points = sweep_window(&spec(period), windows, 100, steps, &SEEDS).unwrap();
    for p in &points {
        println!("period {period:?} window {}: {:.5}", p.window, p.parameter_error);
    }
    points
}

#[test]
fn stationary_error_shrinks_with_window() {
    let points = sweep(None, &[100, 400, 1600], 4000);
    for pair in points.windows(2) {
        assert!(pair[1].parameter_error < pair[0].parameter_error);
    }
    let cumulative = run_stream(&spec(None), Window::Cumulative, 100, 4000, SEEDS[0]).unwrap();
    assert!(cumulative.parameter_error < points[0].parameter_error);
}

#[test]
fn fast_drift_prefers_short_windows() {
    let points = sweep(Some(200), &[100, 200, 400, 800, 1600], 4000);
    assert!(best_window(&points).unwrap() < 400);
}

#[test]
fn moderate_drift_has_interior_optimum() {
    let windows = [100, 500, 4000];
    let points = sweep(Some(2000), &windows, 8000);
    let best = best_window(&points).unwrap();
    assert!(best != windows[0] && best != windows[2], "best window {best}");
}

#[test]
fn step_cost_does_not_grow_with_window() {
    let rows = spec(None).generate(3000, 5).rows;
    let per_step = |w: usize| {
        let model = LabelModel::new(DependencyGraph::star(5), ClassPrior::balance(0.5).unwrap()).unwrap();
        let mut state = RollingState::new(model, Window::Sliding(w), Some(100)).unwrap();
        let start = Instant::now();
        for row in &rows {
            state.step(row).unwrap();
        }
        start.elapsed().as_secs_f64()
    };
    let (short, long) = (per_step(100), per_step(2500));
    // refits read only the running sums, so a 25x longer window costs about the same per row
    assert!(long < 3.0 * short, "{long} vs {short}");
}
