// How accuracy estimation choices behave on the same data: averaging over
// every triplet, taking the median, a single greedy pass, and the sign
// conventions.

use weaklabel::moments::{Aggregation, SignStrategy, TripletMode};
use weaklabel::oracle::{StarModel, StarSource};
use weaklabel::{ClassPrior, DependencyGraph, FitConfig, LabelModel};

pub fn run_example() -> weaklabel::Result<()> {
    let correct = [0.9, 0.8, 0.75, 0.7, 0.65, 0.6];
    let truth_model = StarModel::new(0.5, correct.iter().map(|&c| StarSource { abstain: 0.2, correct: c }).collect())?;
    let data = truth_model.sample(10_000, 4);
    let true_acc = truth_model.accuracies();

    let variants: [(&str, Aggregation, TripletMode, SignStrategy); 4] = [
        ("mean of all triplets", Aggregation::Mean, TripletMode::All, SignStrategy::NonnegativeSum),
        ("median of all triplets", Aggregation::Median, TripletMode::All, SignStrategy::NonnegativeSum),
        ("greedy single pass", Aggregation::Mean, TripletMode::Greedy, SignStrategy::NonnegativeSum),
        ("anchored on L1", Aggregation::Mean, TripletMode::All, SignStrategy::Anchor(vec![(0, 1)])),
    ];
    for (name, aggregation, mode, signs) in variants {
        let mut cfg = FitConfig::default();
        cfg.accuracy.aggregation = aggregation;
        cfg.accuracy.mode = mode;
        cfg.accuracy.signs = signs;
        let model = LabelModel::new(DependencyGraph::star(6), ClassPrior::balance(0.5)?)?.with_config(cfg);
        let est = model.fit(&data.labels)?;
        let acc = est.accuracies().expect("fitted from votes");
        let err: f64 = (0..6).map(|i| (acc.source(i) - true_acc[i]).powi(2)).sum::<f64>().sqrt();
        println!("{name:<24} accuracy error {err:.4}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> weaklabel::Result<()> {
    run_example()
}
