// Two sources that copy each other's mistakes: declaring the dependency
// lets the model recover exact tables from population statistics, while
// ignoring it does not.

use weaklabel::oracle::{enumerate_joint, exact_statistics, CanonicalParameters};
use weaklabel::{DependencyGraph, LabelModel};

pub fn run_example() -> weaklabel::Result<()> {
    let graph = DependencyGraph::builder(1, 4).assign_all(0).source_edge(0, 1).build()?;
    let mut theta = CanonicalParameters::random(graph.clone(), 11);
    theta.theta_dependency.insert((0, 1), 0.6);

    // exact population statistics stand in for an infinite sample
    let exact = exact_statistics(&enumerate_joint(&theta)?, &graph)?;
    let prior = exact.observable.prior();

    let aware = LabelModel::new(graph, prior.clone())?.fit_moments(&exact.moments)?;
    let gap = aware.parameters().max_abs_difference(&exact.parameters)?;
    println!("with the edge declared: largest table error {gap:.2e}");

    let naive = LabelModel::new(DependencyGraph::star(4), prior)?.fit_moments(&exact.moments)?;
    let naive_acc = naive.accuracies().expect("fitted from moments");
    let true_acc = exact.accuracies.values();
    for i in 0..4 {
        println!("L{}: true {:+.4}, ignoring the edge {:+.4}", i + 1, true_acc[i], naive_acc.source(i));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> weaklabel::Result<()> {
    run_example()
}
