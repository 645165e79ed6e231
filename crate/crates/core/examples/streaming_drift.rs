// Streaming labels while two sources periodically turn adversarial. A
// short window adapts after each change; the cumulative estimator keeps
// averaging over both regimes.

use weaklabel::online::{run_stream, sweep_window, DriftSpec, Window};
use weaklabel::oracle::{StarModel, StarSource};

pub fn run_example() -> weaklabel::Result<()> {
    let correct = [0.9, 0.85, 0.8, 0.8, 0.75];
    let base = StarModel::new(0.5, correct.iter().map(|&c| StarSource { abstain: 0.1, correct: c }).collect())?;
    let drifting = DriftSpec { base: base.clone(), flipped: vec![3, 4], period: Some(2000) };

    let windowed = run_stream(&drifting, Window::Sliding(500), 100, 8000, 1)?;
    let cumulative = run_stream(&drifting, Window::Cumulative, 100, 8000, 1)?;
    println!("posterior MSE with drift: window 500 {:.4}, cumulative {:.4}", windowed.posterior_mse, cumulative.posterior_mse);

    let points = sweep_window(&drifting, &[200, 500, 1000, 2000], 100, 8000, &[1, 2])?;
    println!("window  parameter error");
    for p in &points {
        println!("{:>6}  {:.4}", p.window, p.parameter_error);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> weaklabel::Result<()> {
    run_example()
}
