// Fit a label model on simulated votes from five sources of mixed quality
// and compare its labels with majority vote.

use weaklabel::oracle::{StarModel, StarSource};
use weaklabel::{ClassPrior, DependencyGraph, LabelModel};

pub fn run_example() -> weaklabel::Result<()> {
    let correct = [0.9, 0.8, 0.7, 0.65, 0.6];
    let sources = correct.iter().map(|&c| StarSource { abstain: 0.2, correct: c }).collect();
    let truth_model = StarModel::new(0.5, sources)?;
    let data = truth_model.sample(20_000, 7);

    let model = LabelModel::new(DependencyGraph::star(5), ClassPrior::balance(0.5)?)?;
    let fitted = model.fit(&data.labels)?;

    println!("source  true E[λY]  estimated");
    let estimated = fitted.accuracies().expect("fitted from votes");
    for (i, a) in truth_model.accuracies().iter().enumerate() {
        println!("L{:<6} {:>10.3}  {:>9.3}", i + 1, a, estimated.source(i));
    }

    let labels = fitted.predict_proba(&data.labels)?;
    let hard = labels.hard_labels();
    let mut model_hits = 0;
    let mut vote_hits = 0;
    for r in 0..data.labels.n_rows() {
        let y = data.truth[r];
        model_hits += usize::from(hard[r] == y);
        let sum: i32 = data.labels.row(r).iter().map(|&v| i32::from(v)).sum();
        vote_hits += usize::from(sum.signum() as i8 == y);
    }
    let n = data.labels.n_rows() as f64;
    println!("label model agreement {:.3}, majority vote {:.3}", model_hits as f64 / n, vote_hits as f64 / n);
    print!("{}", fitted.diagnostics());
    Ok(())
}

#[allow(dead_code)]
fn main() -> weaklabel::Result<()> {
    run_example()
}
