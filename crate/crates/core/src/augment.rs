//! Abstain augmentation: each ternary source becomes a pair of binary
//! observed variables so the label model stays a binary Ising model.
//!
//! A vote of `+1` maps to the pair `(1, -1)`, `-1` maps to `(-1, 1)`, and an
//! abstain maps to one of the equal-sign pairs `(1, 1)` / `(-1, -1)`. Source
//! `i` (0-based) owns observed columns `2i` and `2i + 1`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{DependencyGraph, LabelMatrix, Vote};

/// How abstains are split between `(1, 1)` and `(-1, -1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AbstainPolicy {
    /// The k-th abstain of a column (counting from zero, in row order) becomes
    /// `(1, 1)` when k is even and `(-1, -1)` when k is odd.
    #[default]
    Alternating,
    /// Fair coin per abstain, one ChaCha stream per column keyed by `(seed, column)`.
    SeededRandom { seed: u64 },
}

/// Row-by-row augmenter. Keeps per-column state so that augmenting a stream
/// one row at a time gives exactly the rows a batch pass would.
#[derive(Debug, Clone)]
pub struct Augmenter {
    policy: AbstainPolicy,
    abstains_seen: Vec<u64>,
    rngs: Vec<ChaCha8Rng>,
}

impl Augmenter {
    pub fn new(sources: usize, policy: AbstainPolicy) -> Self {
        let rngs = match policy {
            AbstainPolicy::Alternating => Vec::new(),
            AbstainPolicy::SeededRandom { seed } => (0..sources)
                .map(|c| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(c as u64);
                    rng
                })
                .collect(),
        };
        Self { policy, abstains_seen: vec![0; sources], rngs }
    }

    pub fn policy(&self) -> AbstainPolicy {
        self.policy
    }

    /// Appends the `2m` augmented values for `votes` onto `out`.
    pub fn push_row(&mut self, votes: &[Vote], out: &mut Vec<i8>) {
        for (c, &v) in votes.iter().enumerate() {
            match v {
                1 => out.extend_from_slice(&[1, -1]),
                -1 => out.extend_from_slice(&[-1, 1]),
                _ => {
                    let up = match self.policy {
                        AbstainPolicy::Alternating => self.abstains_seen[c].is_multiple_of(2),
                        AbstainPolicy::SeededRandom { .. } => self.rngs[c].random::<bool>(),
                    };
                    self.abstains_seen[c] += 1;
                    let s = if up { 1 } else { -1 };
                    out.extend_from_slice(&[s, s]);
                }
            }
        }
    }

    pub fn row(&mut self, votes: &[Vote]) -> Vec<i8> {
        let mut out = Vec::with_capacity(2 * votes.len());
        self.push_row(votes, &mut out);
        out
    }
}

/// `n × 2m` binary matrix over the observed variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedLabelMatrix {
    rows: usize,
    sources: usize,
    values: Vec<i8>,
}

impl AugmentedLabelMatrix {
    /// Wraps already-augmented rows; every value must be `±1`.
    pub fn from_values(rows: usize, sources: usize, values: Vec<i8>) -> Result<Self> {
        if values.len() != rows * 2 * sources || values.iter().any(|v| v.abs() != 1) {
            return Err(crate::Error::ShapeMismatch {
                expected: format!("{rows}x{} values in {{-1, 1}}", 2 * sources),
                found: format!("{} values", values.len()),
            });
        }
        Ok(Self { rows, sources, values })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_sources(&self) -> usize {
        self.sources
    }

    pub fn n_columns(&self) -> usize {
        2 * self.sources
    }

    pub fn row(&self, r: usize) -> &[i8] {
        let w = 2 * self.sources;
        &self.values[r * w..(r + 1) * w]
    }

    pub fn get(&self, r: usize, column: usize) -> i8 {
        self.values[r * 2 * self.sources + column]
    }

    /// Vote of source `i` on row `r`, read back from its pair.
    pub fn vote(&self, r: usize, source: usize) -> Vote {
        collapse_pair(self.get(r, 2 * source), self.get(r, 2 * source + 1))
    }

    pub fn slice_rows(&self, start: usize, end: usize) -> Self {
        let w = 2 * self.sources;
        Self { rows: end - start, sources: self.sources, values: self.values[start * w..end * w].to_vec() }
    }

    /// Collapses pairs back to ternary votes.
    pub fn collapse(&self) -> LabelMatrix {
        let votes = (0..self.rows)
            .flat_map(|r| (0..self.sources).map(move |i| (r, i)))
            .map(|(r, i)| self.vote(r, i))
            .collect();
        LabelMatrix::new(self.rows, self.sources, votes).expect("collapsed votes are ternary")
    }
}

#[inline]
pub fn collapse_pair(first: i8, second: i8) -> Vote {
    if first == second {
        0
    } else {
        first
    }
}

/// Lifts a label matrix into observed-variable space.
pub fn augment_matrix(l: &LabelMatrix, policy: AbstainPolicy) -> AugmentedLabelMatrix {
    let mut aug = Augmenter::new(l.n_sources(), policy);
    let mut values = Vec::with_capacity(l.n_rows() * 2 * l.n_sources());
    for row in l.rows() {
        aug.push_row(row, &mut values);
    }
    AugmentedLabelMatrix { rows: l.n_rows(), sources: l.n_sources(), values }
}

/// Vertex of the augmented Ising graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AugVertex {
    Hidden(usize),
    Observed(usize),
}

/// Ising graph over `D` hidden tasks and `2m` observed variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedGraph {
    tasks: usize,
    assignment: Vec<usize>,
    task_edges: BTreeSet<(usize, usize)>,
    source_edges: BTreeSet<(usize, usize)>,
    /// Connected component of each source in the source-edge graph.
    component: Vec<usize>,
}

impl AugmentedGraph {
    pub fn n_tasks(&self) -> usize {
        self.tasks
    }

    pub fn n_sources(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_observed(&self) -> usize {
        2 * self.assignment.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.tasks + self.n_observed()
    }

    /// Observed columns of source `i`.
    pub fn lift(&self, source: usize) -> (usize, usize) {
        (2 * source, 2 * source + 1)
    }

    /// Hidden task that observed column `c` acts on.
    pub fn task_of_column(&self, column: usize) -> usize {
        self.assignment[column / 2]
    }

    pub fn task_of_source(&self, source: usize) -> usize {
        self.assignment[source]
    }

    pub fn task_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.task_edges
    }

    pub fn source_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.source_edges
    }

    /// Direct dependency edge between two distinct sources.
    pub fn share_edge(&self, i: usize, j: usize) -> bool {
        self.source_edges.contains(&(i.min(j), i.max(j)))
    }

    /// Sources are conditionally dependent given their task when a path of
    /// dependency edges joins them; only the hidden task separates sources.
    pub fn sources_dependent(&self, i: usize, j: usize) -> bool {
        self.component[i] == self.component[j]
    }

    /// Observed variables are conditionally dependent given their task when
    /// they belong to the same source or to sources linked by dependency edges.
    pub fn columns_dependent(&self, a: usize, b: usize) -> bool {
        self.sources_dependent(a / 2, b / 2)
    }

    pub fn edges(&self) -> Vec<(AugVertex, AugVertex)> {
        let mut out = Vec::new();
        for &(d, e) in &self.task_edges {
            out.push((AugVertex::Hidden(d), AugVertex::Hidden(e)));
        }
        for (i, &d) in self.assignment.iter().enumerate() {
            let (a, b) = self.lift(i);
            out.push((AugVertex::Hidden(d), AugVertex::Observed(a)));
            out.push((AugVertex::Hidden(d), AugVertex::Observed(b)));
            out.push((AugVertex::Observed(a), AugVertex::Observed(b)));
        }
        for &(i, j) in &self.source_edges {
            let (a1, a2) = self.lift(i);
            let (b1, b2) = self.lift(j);
            for x in [a1, a2] {
                for y in [b1, b2] {
                    out.push((AugVertex::Observed(x), AugVertex::Observed(y)));
                }
            }
        }
        out
    }

    /// Number of edges joining the pairs of two different sources.
    pub fn cross_edge_count(&self) -> usize {
        self.edges()
            .iter()
            .filter(|(a, b)| match (a, b) {
                (AugVertex::Observed(x), AugVertex::Observed(y)) => x / 2 != y / 2,
                _ => false,
            })
            .count()
    }
}

pub fn augment_graph(g: &DependencyGraph) -> AugmentedGraph {
    let m = g.n_sources();
    let mut component: Vec<usize> = (0..m).collect();
    fn root(c: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while c[r] != r {
            r = c[r];
        }
        c[x] = r;
        r
    }
    for &(i, j) in g.source_edges() {
        let (a, b) = (root(&mut component, i), root(&mut component, j));
        component[a.max(b)] = a.min(b);
    }
    for i in 0..m {
        component[i] = root(&mut component, i);
    }
    AugmentedGraph {
        tasks: g.n_tasks(),
        assignment: g.assignment().to_vec(),
        task_edges: g.task_edges().clone(),
        source_edges: g.source_edges().clone(),
        component,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn votes_map_to_pairs() {
        let l = LabelMatrix::from_rows(&[[1i8], [-1]]).unwrap();
        let a = augment_matrix(&l, AbstainPolicy::Alternating);
        assert_eq!(a.row(0), &[1, -1]);
        assert_eq!(a.row(1), &[-1, 1]);
    }

    #[test]
    fn alternating_abstains() {
        let l = LabelMatrix::from_rows(&[[0i8], [0], [0], [0]]).unwrap();
        let a = augment_matrix(&l, AbstainPolicy::Alternating);
        let pairs: Vec<&[i8]> = (0..4).map(|r| a.row(r)).collect();
        assert_eq!(pairs, vec![&[1, 1][..], &[-1, -1], &[1, 1], &[-1, -1]]);
    }

    #[test]
    fn alternating_counts_per_column_skip_votes() {
        let l = LabelMatrix::from_rows(&[[0i8, 1], [1, 0], [0, 0]]).unwrap();
        let a = augment_matrix(&l, AbstainPolicy::Alternating);
        assert_eq!(a.row(0), &[1, 1, 1, -1]);
        assert_eq!(a.row(1), &[1, -1, 1, 1]);
        assert_eq!(a.row(2), &[-1, -1, -1, -1]);
    }

    #[test]
    fn random_policy_is_column_order_independent() {
        let l = LabelMatrix::from_rows(&[[0i8, 0], [0, 0], [0, 0], [0, 0], [0, 0]]).unwrap();
        let swapped = l.map(|r, c, _| l.get(r, 1 - c)).unwrap();
        let policy = AbstainPolicy::SeededRandom { seed: 7 };
        let a = augment_matrix(&l, policy);
        let b = augment_matrix(&swapped, policy);
        // column 0 in both draws from stream 0 on the same abstain sequence
        for r in 0..5 {
            assert_eq!(a.get(r, 0), b.get(r, 0));
        }
        assert_eq!(augment_matrix(&l, policy), a);
    }

    #[test]
    fn fig5_topology() {
        let g = DependencyGraph::builder(1, 4).assign_all(0).source_edge(0, 1).build().unwrap();
        let ag = augment_graph(&g);
        assert_eq!(ag.n_observed(), 8);
        assert_eq!(ag.n_vertices(), 9);
        let internal = ag
            .edges()
            .iter()
            .filter(|(a, b)| matches!((a, b), (AugVertex::Observed(x), AugVertex::Observed(y)) if x / 2 == y / 2))
            .count();
        assert_eq!(internal, 4);
        assert_eq!(ag.cross_edge_count(), 4);
        assert!(ag.columns_dependent(0, 3));
        assert!(!ag.columns_dependent(0, 4));
    }

    #[test]
    fn dependence_follows_edge_paths() {
        let g = DependencyGraph::builder(1, 4).assign_all(0).source_edge(0, 1).source_edge(1, 2).build().unwrap();
        let ag = augment_graph(&g);
        assert!(!ag.share_edge(0, 2));
        assert!(ag.sources_dependent(0, 2));
        assert!(!ag.sources_dependent(0, 3));
    }

    #[test]
    fn smallest_instance() {
        let ag = augment_graph(&DependencyGraph::star(1));
        let edges = ag.edges();
        assert_eq!(ag.n_observed(), 2);
        assert_eq!(edges.iter().filter(|(a, _)| matches!(a, AugVertex::Hidden(_))).count(), 2);
        assert_eq!(edges.len(), 3);
        assert_eq!(ag.task_of_column(0), 0);
        assert_eq!(augment_graph(&DependencyGraph::star(5)).cross_edge_count(), 0);
    }
}
