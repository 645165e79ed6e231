// Three-class labeling through one binary model per class.

use weaklabel::multiclass::one_vs_all;
use weaklabel::oracle::{ClassSource, ClassStarModel};
use weaklabel::{DependencyGraph, FitConfig};

pub fn run_example() -> weaklabel::Result<()> {
    let correct = [0.9, 0.7, 0.65, 0.6];
    let sources = correct.iter().map(|&c| ClassSource { abstain: 0.25, correct: c }).collect();
    let truth_model = ClassStarModel::new(vec![0.5, 0.3, 0.2], sources)?;
    let (votes, truth) = truth_model.sample(30_000, 5);

    let model = one_vs_all(&votes, &DependencyGraph::star(4), &truth_model.class_probs, &FitConfig::default())?;
    let probs = model.predict_proba(&votes)?;
    let hits = probs.argmax().iter().zip(&truth).filter(|(a, b)| a == b).count();
    println!("argmax agreement with the hidden class: {:.3}", hits as f64 / truth.len() as f64);
    println!("row 1 votes {:?} -> {:?}", votes.row(0), probs.row(0));
    Ok(())
}

#[allow(dead_code)]
fn main() -> weaklabel::Result<()> {
    run_example()
}
