use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::DependencyGraph;

/// Canonical (natural) parameters of the binary Ising model over tasks and
/// augmented source pairs.
///
/// With `Y` the tasks and `v` the observed pairs, the unnormalized log
/// density is
///
/// ```text
///   Σ_d θ_d Y_d + Σ_(d,e) θ_de Y_d Y_e
/// + Σ_i θ_i (v_{2i-1} - v_{2i}) Y(i) + Σ_i θ_ii v_{2i-1} v_{2i}
/// + Σ_(i,j) θ_ij (v_{2i-1} - v_{2i}) (v_{2j-1} - v_{2j})
/// ```
///
/// The two equal-sign states of a pair share every term, so abstains split
/// evenly between `(1, 1)` and `(-1, -1)` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalParameters {
    pub graph: DependencyGraph,
    pub theta_task: Vec<f64>,
    pub theta_task_edges: BTreeMap<(usize, usize), f64>,
    pub theta_accuracy: Vec<f64>,
    pub theta_abstain: Vec<f64>,
    pub theta_dependency: BTreeMap<(usize, usize), f64>,
    /// Sources whose equal-sign states get zero weight (the `θ_ii → -∞` limit).
    pub never_abstain: Vec<bool>,
}

impl CanonicalParameters {
    pub fn zeros(graph: DependencyGraph) -> Self {
        let (d, m) = (graph.n_tasks(), graph.n_sources());
        Self {
            theta_task: vec![0.0; d],
            theta_task_edges: graph.task_edges().iter().map(|&e| (e, 0.0)).collect(),
            theta_accuracy: vec![0.0; m],
            theta_abstain: vec![0.0; m],
            theta_dependency: graph.source_edges().iter().map(|&e| (e, 0.0)).collect(),
            never_abstain: vec![false; m],
            graph,
        }
    }

    /// Random parameters: accuracy in `[0.1, 1.0]`, dependency in
    /// `[-0.3, 0.3]`, abstain in `[-0.5, 0.5]`, task and task-edge terms in
    /// `[-0.3, 0.3]`.
    pub fn random(graph: DependencyGraph, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(graph);
        for t in &mut p.theta_task {
            *t = rng.random_range(-0.3..=0.3);
        }
        for t in p.theta_task_edges.values_mut() {
            *t = rng.random_range(-0.3..=0.3);
        }
        for t in &mut p.theta_accuracy {
            *t = rng.random_range(0.1..=1.0);
        }
        for t in &mut p.theta_abstain {
            *t = rng.random_range(-0.5..=0.5);
        }
        for t in p.theta_dependency.values_mut() {
            *t = rng.random_range(-0.3..=0.3);
        }
        p
    }

    /// Index sets must match the graph exactly.
    pub fn validate(&self) -> Result<()> {
        let g = &self.graph;
        let (d, m) = (g.n_tasks(), g.n_sources());
        let bad = self.theta_task.len() != d
            || self.theta_accuracy.len() != m
            || self.theta_abstain.len() != m
            || self.never_abstain.len() != m
            || !self.theta_task_edges.keys().eq(g.task_edges().iter())
            || !self.theta_dependency.keys().eq(g.source_edges().iter());
        if bad {
            return Err(Error::ShapeMismatch {
                expected: format!("parameters for {d} tasks, {m} sources and the graph's edges"),
                found: "mismatched parameter sets".into(),
            });
        }
        let all = self
            .theta_task
            .iter()
            .chain(self.theta_task_edges.values())
            .chain(&self.theta_accuracy)
            .chain(&self.theta_abstain)
            .chain(self.theta_dependency.values());
        if all.clone().any(|t| !t.is_finite()) {
            return Err(Error::Config("canonical parameters must be finite".into()));
        }
        Ok(())
    }

    /// Log weight of one configuration, or `None` for a forbidden state.
    pub fn log_weight(&self, y: &[i8], v: &[i8]) -> Option<f64> {
        let g = &self.graph;
        let mut e = 0.0;
        for (d, t) in self.theta_task.iter().enumerate() {
            e += t * f64::from(y[d]);
        }
        for (&(d, f), t) in &self.theta_task_edges {
            e += t * f64::from(y[d] * y[f]);
        }
        for i in 0..g.n_sources() {
            let (a, b) = (v[2 * i], v[2 * i + 1]);
            if a == b && self.never_abstain[i] {
                return None;
            }
            e += self.theta_accuracy[i] * f64::from((a - b) * y[g.task_of(i)]);
            e += self.theta_abstain[i] * f64::from(a * b);
        }
        for (&(i, j), t) in &self.theta_dependency {
            e += t * f64::from((v[2 * i] - v[2 * i + 1]) * (v[2 * j] - v[2 * j + 1]));
        }
        Some(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_is_seeded_and_in_range() {
        let g = DependencyGraph::builder(1, 4).assign_all(0).source_edge(0, 1).build().unwrap();
        let a = CanonicalParameters::random(g.clone(), 3);
        assert_eq!(a, CanonicalParameters::random(g, 3));
        assert!(a.theta_accuracy.iter().all(|t| (0.1..=1.0).contains(t)));
        assert!(a.theta_dependency.values().all(|t| t.abs() <= 0.3));
        a.validate().unwrap();
    }

    #[test]
    fn abstain_states_share_weight() {
        let mut p = CanonicalParameters::zeros(DependencyGraph::star(2));
        p.theta_accuracy = vec![0.4, 0.7];
        p.theta_abstain = vec![0.2, -0.1];
        let up = p.log_weight(&[1], &[1, 1, 1, -1]).unwrap();
        let down = p.log_weight(&[1], &[-1, -1, 1, -1]).unwrap();
        assert_eq!(up, down);
        p.never_abstain[0] = true;
        assert!(p.log_weight(&[1], &[1, 1, 1, -1]).is_none());
    }
}
