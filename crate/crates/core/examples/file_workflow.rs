// The on-disk workflow: write a graph spec and a vote CSV, fit, save the
// parameters, reload them and label new rows.

use std::fs;

use weaklabel::io;
use weaklabel::oracle::{StarModel, StarSource};
use weaklabel::{FittedModel, LabelModel};

pub fn run_example() -> weaklabel::Result<()> {
    let dir = std::env::temp_dir().join(format!("weaklabel-example-{}", std::process::id()));
    fs::create_dir_all(&dir)?;

    let sources = [0.85, 0.75, 0.7].iter().map(|&c| StarSource { abstain: 0.3, correct: c }).collect();
    let data = StarModel::new(0.4, sources)?.sample(5000, 2);
    fs::write(dir.join("graph.txt"), "tasks 1\nsources 3\n")?;
    fs::write(dir.join("votes.csv"), format!("l1,l2,l3\n{}", io::format_labels(&data.labels)))?;
    fs::write(dir.join("prior.txt"), "balance 0.4\n")?;

    let graph = io::read_graph(&dir.join("graph.txt"))?;
    let prior = io::read_prior(&dir.join("prior.txt"))?;
    let votes = io::read_labels(&dir.join("votes.csv"))?;
    let fitted = LabelModel::new(graph, prior)?.fit(&votes)?;
    fs::write(dir.join("params.txt"), io::format_params(fitted.parameters()))?;

    let reloaded = FittedModel::from_parameters(io::read_params(&dir.join("params.txt"))?)?;
    assert_eq!(reloaded.parameters(), fitted.parameters());
    let mut csv = Vec::new();
    reloaded.predict_proba(&votes)?.write_csv(&mut csv)?;
    let text = String::from_utf8_lossy(&csv);
    for line in text.lines().take(4) {
        println!("{line}");
    }
    fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> weaklabel::Result<()> {
    run_example()
}
